"""Frame types, image reconstructors, and per-frame reconstruction errors.

Reconstructors are small fully-connected networks trained by mini-batch
SGD to reproduce nominal camera frames: a shallow autoencoder (one hidden
layer), a deep autoencoder (five node layers), and a sequence predictor
that maps the previous k frames to the next one.  The per-frame error is
the mean pixel-wise squared difference between a frame and its
reconstruction.

Training is deterministic given the seed: weight initialization and the
per-epoch batch shuffle both draw from one seeded generator, so two runs
with identical inputs produce bit-identical weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError

__all__ = [
    "FrameTensor",
    "FrameStream",
    "ErrorSeries",
    "ReconstructorKind",
    "Activation",
    "ReconstructorModel",
    "TrainConfig",
    "reconstruction_error",
    "train_reconstructor",
    "reconstruct",
    "error_series",
]


class ReconstructorKind(str, Enum):
    SAE = "sae"
    DAE = "dae"
    SEQ = "seq"


class Activation(str, Enum):
    SIGMOID = "sigmoid"
    RELU = "relu"


@dataclass
class FrameTensor:
    """One image frame: width x height x channels values in [0, 1].

    pixels is flat, row-major with channel last: index (y, x, c) maps to
    (y * width + x) * channels + c.
    """

    width: int
    height: int
    channels: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0 or self.channels <= 0:
            raise ValueError(
                f"frame dimensions must be positive, got "
                f"{self.width}x{self.height}x{self.channels}"
            )
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.float64).ravel()
        expected = self.width * self.height * self.channels
        if self.pixels.size != expected:
            raise ValueError(
                f"pixel count {self.pixels.size} does not match "
                f"{self.width}x{self.height}x{self.channels} = {expected}"
            )
        if not np.all(np.isfinite(self.pixels)):
            raise ValueError("pixel values must be finite")
        lo = float(self.pixels.min(initial=0.0))
        hi = float(self.pixels.max(initial=0.0))
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"pixel values must lie in [0, 1], found range [{lo}, {hi}]")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.width, self.height, self.channels)

    def as_image(self) -> np.ndarray:
        """View as a (height, width, channels) array."""
        return self.pixels.reshape(self.height, self.width, self.channels)


@dataclass
class FrameStream:
    """Ordered frames sharing one shape; index i is discrete time t = i."""

    frames: list[FrameTensor]
    frame_rate_hz: float = 30.0

    def __post_init__(self):
        if not self.frame_rate_hz > 0.0:
            raise ValueError(f"frame rate must be positive, got {self.frame_rate_hz}")
        if self.frames:
            shape = self.frames[0].shape
            for i, f in enumerate(self.frames):
                if f.shape != shape:
                    raise ValueError(
                        f"frame {i} has shape {f.shape}, expected {shape}"
                    )

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def frame_shape(self) -> tuple[int, int, int]:
        if not self.frames:
            raise ValueError("empty stream has no frame shape")
        return self.frames[0].shape

    def as_matrix(self) -> np.ndarray:
        """Stack pixels into an (n_frames, n_pixels) matrix."""
        if not self.frames:
            raise ValueError("empty stream has no pixel matrix")
        return np.stack([f.pixels for f in self.frames])


@dataclass
class ErrorSeries:
    """Reconstruction errors indexed by frame: values[i] belongs to frame
    start_index + i."""

    values: np.ndarray
    start_index: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).ravel()
        if self.values.size and float(self.values.min()) < 0.0:
            raise ValueError("reconstruction errors cannot be negative")

    def __len__(self) -> int:
        return int(self.values.size)

    def frame_indices(self) -> np.ndarray:
        return np.arange(self.start_index, self.start_index + self.values.size)


def reconstruction_error(x: FrameTensor, x_prime: FrameTensor) -> float:
    """Mean pixel-wise squared error between a frame and its reconstruction."""
    if x.shape != x_prime.shape:
        raise ValueError(f"frame shapes differ: {x.shape} vs {x_prime.shape}")
    diff = x.pixels - x_prime.pixels
    return float(np.mean(diff * diff))


@dataclass
class TrainConfig:
    """Hyperparameters for reconstructor training.

    hidden_sizes=None selects a per-kind default; for the deep autoencoder
    it must name exactly three sizes (encoder, bottleneck, decoder), for
    the shallow one exactly one.  learning_rate=None also resolves per
    kind: the sequence predictor's affine map sees the full concatenated
    pixel vector and diverges at the step size the autoencoders want.
    history_k only applies to the sequence predictor.
    """

    hidden_sizes: tuple[int, ...] | None = None
    learning_rate: float | None = None
    epochs: int = 150
    batch_size: int = 32
    seed: int = 0
    history_k: int = 3
    activation: Activation = Activation.RELU

    def __post_init__(self):
        if self.hidden_sizes is not None:
            self.hidden_sizes = tuple(int(h) for h in self.hidden_sizes)
            if any(h <= 0 for h in self.hidden_sizes):
                raise ConfigError(f"hidden sizes must be positive, got {self.hidden_sizes}")
        if self.learning_rate is not None and not self.learning_rate > 0.0:
            raise ConfigError(f"learning rate must be positive, got {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be non-negative, got {self.epochs}")
        if self.batch_size <= 0:
            raise ConfigError(f"batch size must be positive, got {self.batch_size}")
        if self.history_k <= 0:
            raise ConfigError(f"history_k must be positive, got {self.history_k}")
        self.activation = Activation(self.activation)


_DEFAULT_HIDDEN = {
    ReconstructorKind.SAE: (32,),
    ReconstructorKind.DAE: (64, 16, 64),
    ReconstructorKind.SEQ: (),
}

_DEFAULT_LEARNING_RATE = {
    ReconstructorKind.SAE: 10.0,
    ReconstructorKind.DAE: 10.0,
    ReconstructorKind.SEQ: 1.0,
}


@dataclass
class ReconstructorModel:
    """A trained fully-connected reconstructor.

    weights[l] has shape (layer_sizes[l+1], layer_sizes[l]); hidden layers
    apply the activation, the output layer is identity (clamped to [0, 1]
    only at reconstruction time, so training gradients stay exact).
    """

    kind: ReconstructorKind
    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: Activation
    history_k: int | None = None
    epoch_losses: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.kind = ReconstructorKind(self.kind)
        self.activation = Activation(self.activation)
        self.layer_sizes = [int(s) for s in self.layer_sizes]
        if any(s <= 0 for s in self.layer_sizes):
            raise ValueError(f"layer sizes must be positive, got {self.layer_sizes}")
        n_links = len(self.layer_sizes) - 1
        if len(self.weights) != n_links or len(self.biases) != n_links:
            raise ValueError(
                f"expected {n_links} weight/bias pairs for {len(self.layer_sizes)} layers"
            )
        for l in range(n_links):
            n_in, n_out = self.layer_sizes[l], self.layer_sizes[l + 1]
            if self.weights[l].shape != (n_out, n_in):
                raise ValueError(
                    f"weight {l} has shape {self.weights[l].shape}, "
                    f"expected {(n_out, n_in)}"
                )
            if self.biases[l].shape != (n_out,):
                raise ValueError(
                    f"bias {l} has shape {self.biases[l].shape}, expected {(n_out,)}"
                )
        if self.kind is ReconstructorKind.SAE and len(self.layer_sizes) != 3:
            raise ValueError("shallow autoencoder must have exactly one hidden layer")
        if self.kind is ReconstructorKind.DAE and len(self.layer_sizes) != 5:
            raise ValueError("deep autoencoder must have exactly five node layers")
        if self.kind in (ReconstructorKind.SAE, ReconstructorKind.DAE):
            if self.layer_sizes[0] != self.layer_sizes[-1]:
                raise ValueError("autoencoder input and output sizes must match")
            if self.history_k not in (None, 1):
                raise ValueError("history_k applies only to the sequence predictor")
        if self.kind is ReconstructorKind.SEQ:
            if self.history_k is None or self.history_k <= 0:
                raise ValueError("sequence predictor needs a positive history_k")
            if self.layer_sizes[0] != self.history_k * self.layer_sizes[-1]:
                raise ValueError(
                    f"sequence input size {self.layer_sizes[0]} must equal "
                    f"history_k * output size = {self.history_k * self.layer_sizes[-1]}"
                )

    @property
    def input_window(self) -> int:
        """Number of past frames one reconstruction consumes."""
        return self.history_k if self.kind is ReconstructorKind.SEQ else 1


def _activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.RELU:
        return np.maximum(z, 0.0)
    # tanh form of the sigmoid avoids exp overflow for large |z|
    return 0.5 * (np.tanh(0.5 * z) + 1.0)


def _activate_grad(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.RELU:
        return (z > 0.0).astype(np.float64)
    s = 0.5 * (np.tanh(0.5 * z) + 1.0)
    return s * (1.0 - s)


def _forward(
    weights: list[np.ndarray],
    biases: list[np.ndarray],
    activation: Activation,
    x: np.ndarray,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Return (pre-activations, post-activations); post[0] is the input."""
    pre: list[np.ndarray] = []
    post: list[np.ndarray] = [x]
    a = x
    last = len(weights) - 1
    for l, (w, b) in enumerate(zip(weights, biases)):
        z = a @ w.T + b
        pre.append(z)
        a = z if l == last else _activate(z, activation)
        post.append(a)
    return pre, post


def _loss_and_grads(
    weights: list[np.ndarray],
    biases: list[np.ndarray],
    activation: Activation,
    x: np.ndarray,
    target: np.ndarray,
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Batch loss (mean over examples of per-pixel mean squared error) and
    its gradients with respect to every weight and bias."""
    pre, post = _forward(weights, biases, activation, x)
    diff = post[-1] - target
    loss = float(np.mean(diff * diff))
    delta = (2.0 / diff.size) * diff
    n_links = len(weights)
    grad_w: list[np.ndarray] = [np.empty(0)] * n_links
    grad_b: list[np.ndarray] = [np.empty(0)] * n_links
    for l in range(n_links - 1, -1, -1):
        grad_w[l] = delta.T @ post[l]
        grad_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ weights[l]) * _activate_grad(pre[l - 1], activation)
    return loss, grad_w, grad_b


def _build_training_set(
    stream: FrameStream, kind: ReconstructorKind, history_k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Input/target matrices: identity pairs for autoencoders, k-frame
    windows (oldest first) predicting the next frame for the sequence kind."""
    frames = stream.as_matrix()
    if kind in (ReconstructorKind.SAE, ReconstructorKind.DAE):
        return frames, frames
    n = frames.shape[0]
    if n <= history_k:
        raise ValueError(
            f"sequence training needs more than history_k={history_k} frames, got {n}"
        )
    inputs = np.stack(
        [frames[i - history_k : i].ravel() for i in range(history_k, n)]
    )
    return inputs, frames[history_k:]


def train_reconstructor(
    stream: FrameStream,
    kind: ReconstructorKind | str,
    hyper: TrainConfig | None = None,
) -> ReconstructorModel:
    """Fit a reconstructor to a nominal stream with mini-batch SGD."""
    kind = ReconstructorKind(kind)
    hyper = hyper or TrainConfig()
    if len(stream) == 0:
        raise ValueError("cannot train on an empty stream")
    w, h, c = stream.frame_shape
    n_pixels = w * h * c
    hidden = hyper.hidden_sizes if hyper.hidden_sizes is not None else _DEFAULT_HIDDEN[kind]
    if kind is ReconstructorKind.SAE and len(hidden) != 1:
        raise ConfigError(f"shallow autoencoder takes one hidden size, got {hidden}")
    if kind is ReconstructorKind.DAE and len(hidden) != 3:
        raise ConfigError(f"deep autoencoder takes three hidden sizes, got {hidden}")
    history_k = hyper.history_k if kind is ReconstructorKind.SEQ else None
    in_size = n_pixels * (history_k if history_k else 1)
    layer_sizes = [in_size, *hidden, n_pixels]
    learning_rate = (
        hyper.learning_rate
        if hyper.learning_rate is not None
        else _DEFAULT_LEARNING_RATE[kind]
    )

    rng = np.random.default_rng(hyper.seed)
    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / math.sqrt(n_in)
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))

    inputs, targets = _build_training_set(stream, kind, hyper.history_k)
    n_samples = inputs.shape[0]
    epoch_losses: list[float] = []
    for _ in range(hyper.epochs):
        order = rng.permutation(n_samples)
        batch_losses: list[float] = []
        for start in range(0, n_samples, hyper.batch_size):
            idx = order[start : start + hyper.batch_size]
            loss, grad_w, grad_b = _loss_and_grads(
                weights, biases, hyper.activation, inputs[idx], targets[idx]
            )
            batch_losses.append(loss)
            for l in range(len(weights)):
                weights[l] -= learning_rate * grad_w[l]
                biases[l] -= learning_rate * grad_b[l]
        epoch_losses.append(float(np.mean(batch_losses)))

    return ReconstructorModel(
        kind=kind,
        layer_sizes=layer_sizes,
        weights=weights,
        biases=biases,
        activation=hyper.activation,
        history_k=history_k,
        epoch_losses=epoch_losses,
    )


def _forward_clamped(model: ReconstructorModel, inputs: np.ndarray) -> np.ndarray:
    _, post = _forward(model.weights, model.biases, model.activation, inputs)
    return np.clip(post[-1], 0.0, 1.0)


def reconstruct(
    model: ReconstructorModel, history: list[FrameTensor] | tuple[FrameTensor, ...]
) -> FrameTensor:
    """Reconstruct one frame.

    Autoencoders take the frame itself (history of length 1); the sequence
    predictor takes its previous history_k frames, oldest first.
    """
    needed = model.input_window
    if len(history) != needed:
        raise ValueError(f"{model.kind.value} needs {needed} input frames, got {len(history)}")
    shape = history[0].shape
    for f in history:
        if f.shape != shape:
            raise ValueError("history frames must share one shape")
    flat = np.concatenate([f.pixels for f in history])
    if flat.size != model.layer_sizes[0]:
        raise ValueError(
            f"input size {flat.size} does not match model input {model.layer_sizes[0]}"
        )
    out = _forward_clamped(model, flat[None, :])[0]
    w, h, c = shape
    return FrameTensor(width=w, height=h, channels=c, pixels=out)


def error_series(model: ReconstructorModel, stream: FrameStream) -> ErrorSeries:
    """Per-frame reconstruction errors over a stream.

    Autoencoders score every frame (start_index 0); the sequence predictor
    has no prediction for the first history_k frames, so its series starts
    at index history_k.
    """
    n = len(stream)
    if n == 0:
        raise ValueError("cannot score an empty stream")
    frames = stream.as_matrix()
    if model.kind in (ReconstructorKind.SAE, ReconstructorKind.DAE):
        recon = _forward_clamped(model, frames)
        diffs = frames - recon
        return ErrorSeries(values=np.mean(diffs * diffs, axis=1), start_index=0)
    k = model.history_k
    if n <= k:
        raise ValueError(f"sequence scoring needs more than {k} frames, got {n}")
    inputs = np.stack([frames[i - k : i].ravel() for i in range(k, n)])
    recon = _forward_clamped(model, inputs)
    diffs = frames[k:] - recon
    return ErrorSeries(values=np.mean(diffs * diffs, axis=1), start_index=k)
