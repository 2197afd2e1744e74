"""Reconstructors: gradient exactness, memorization, scoring conventions."""

from __future__ import annotations

import numpy as np
import pytest

from lanewatch.errors import ConfigError
from lanewatch.reconstruct import (
    Activation,
    ErrorSeries,
    FrameStream,
    FrameTensor,
    ReconstructorKind,
    ReconstructorModel,
    TrainConfig,
    error_series,
    reconstruct,
    reconstruction_error,
    train_reconstructor,
)
from lanewatch.reconstruct import _loss_and_grads


def _frame(pixels: np.ndarray, w: int = 4, h: int = 4) -> FrameTensor:
    return FrameTensor(width=w, height=h, channels=1, pixels=np.asarray(pixels, float))


def _noise_stream(seed: int, n: int, w: int = 4, h: int = 4) -> FrameStream:
    rng = np.random.default_rng(seed)
    frames = [_frame(rng.random(w * h), w, h) for _ in range(n)]
    return FrameStream(frames=frames, frame_rate_hz=10.0)


# ---------------------------------------------------------------- gradients

def test_gradients_match_finite_differences():
    rng = np.random.default_rng(0)
    sizes = [6, 4, 6]
    weights = [rng.standard_normal((4, 6)) * 0.5, rng.standard_normal((6, 4)) * 0.5]
    biases = [rng.standard_normal(4) * 0.1, rng.standard_normal(6) * 0.1]
    x = rng.random((3, 6))
    # tanh-free sigmoid path plus relu path both checked
    for act in (Activation.SIGMOID, Activation.RELU):
        loss, grad_w, grad_b = _loss_and_grads(weights, biases, act, x, x)
        eps = 1e-6
        for l in range(2):
            for i, j in [(0, 0), (1, 2)]:
                w_hi = [w.copy() for w in weights]
                w_lo = [w.copy() for w in weights]
                w_hi[l][i, j] += eps
                w_lo[l][i, j] -= eps
                hi, _, _ = _loss_and_grads(w_hi, biases, act, x, x)
                lo, _, _ = _loss_and_grads(w_lo, biases, act, x, x)
                numeric = (hi - lo) / (2.0 * eps)
                assert grad_w[l][i, j] == pytest.approx(numeric, rel=1e-4, abs=1e-9)
            b_hi = [b.copy() for b in biases]
            b_lo = [b.copy() for b in biases]
            b_hi[l][0] += eps
            b_lo[l][0] -= eps
            hi, _, _ = _loss_and_grads(weights, b_hi, act, x, x)
            lo, _, _ = _loss_and_grads(weights, b_lo, act, x, x)
            numeric = (hi - lo) / (2.0 * eps)
            assert grad_b[l][0] == pytest.approx(numeric, rel=1e-4, abs=1e-9)


# ----------------------------------------------------------------- training

def test_shallow_autoencoder_memorizes_constant_frame():
    frame = _frame(np.full(16, 0.3))
    stream = FrameStream(frames=[frame] * 40, frame_rate_hz=10.0)
    model = train_reconstructor(
        stream, ReconstructorKind.SAE, TrainConfig(hidden_sizes=(8,), epochs=200, seed=1)
    )
    errors = error_series(model, stream)
    assert float(errors.values.max()) < 1e-4
    assert model.epoch_losses[-1] < model.epoch_losses[0]


def test_training_is_deterministic():
    stream = _noise_stream(5, 30)
    cfg = TrainConfig(hidden_sizes=(6,), epochs=15, seed=42)
    a = train_reconstructor(stream, ReconstructorKind.SAE, cfg)
    b = train_reconstructor(stream, ReconstructorKind.SAE, cfg)
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)
    assert a.epoch_losses == b.epoch_losses


def test_kind_defaults_resolve():
    stream = _noise_stream(6, 25)
    sae = train_reconstructor(stream, "sae", TrainConfig(epochs=1))
    assert sae.layer_sizes == [16, 32, 16]
    dae = train_reconstructor(stream, "dae", TrainConfig(epochs=1))
    assert dae.layer_sizes == [16, 64, 16, 64, 16]
    seq = train_reconstructor(stream, "seq", TrainConfig(epochs=1, history_k=3))
    assert seq.layer_sizes == [48, 16]
    assert seq.input_window == 3


def test_hidden_size_arity_enforced():
    stream = _noise_stream(7, 10)
    with pytest.raises(ConfigError):
        train_reconstructor(stream, "sae", TrainConfig(hidden_sizes=(8, 8), epochs=1))
    with pytest.raises(ConfigError):
        train_reconstructor(stream, "dae", TrainConfig(hidden_sizes=(8,), epochs=1))


# ------------------------------------------------------------------ scoring

def test_error_series_is_mean_pixel_squared_error():
    stream = _noise_stream(8, 12)
    model = train_reconstructor(stream, "sae", TrainConfig(hidden_sizes=(6,), epochs=3, seed=2))
    errors = error_series(model, stream)
    frame = stream.frames[4]
    recon = reconstruct(model, [frame])
    by_hand = float(np.mean((frame.pixels - recon.pixels) ** 2))
    assert errors.values[4] == pytest.approx(by_hand, rel=1e-12)
    assert errors.start_index == 0


def test_sequence_scoring_skips_history():
    stream = _noise_stream(9, 20)
    model = train_reconstructor(stream, "seq", TrainConfig(epochs=3, history_k=4, seed=3))
    errors = error_series(model, stream)
    assert errors.start_index == 4
    assert len(errors.values) == 16
    recon = reconstruct(model, stream.frames[0:4])
    by_hand = float(np.mean((stream.frames[4].pixels - recon.pixels) ** 2))
    assert errors.values[0] == pytest.approx(by_hand, rel=1e-12)


def test_reconstruct_checks_history_length():
    stream = _noise_stream(10, 10)
    model = train_reconstructor(stream, "sae", TrainConfig(hidden_sizes=(6,), epochs=1))
    with pytest.raises(ValueError):
        reconstruct(model, stream.frames[:2])


def test_reconstruction_error_hand_value():
    a = _frame([0.0, 0.5, 1.0, 0.0] * 4)
    b = _frame([0.5, 0.5, 0.0, 0.0] * 4)
    # squared diffs: 0.25, 0, 1.0, 0 repeating -> mean 0.3125
    assert reconstruction_error(a, b) == pytest.approx(0.3125, rel=1e-15)
    assert reconstruction_error(a, a) == 0.0


def test_reconstruction_clamped_to_unit_interval():
    stream = _noise_stream(12, 15)
    model = train_reconstructor(stream, "sae", TrainConfig(hidden_sizes=(6,), epochs=0, seed=4))
    out = reconstruct(model, [stream.frames[0]])
    assert float(out.pixels.min()) >= 0.0
    assert float(out.pixels.max()) <= 1.0


# --------------------------------------------------------------- containers

def test_frame_tensor_validation():
    with pytest.raises(ValueError):
        FrameTensor(width=2, height=2, channels=1, pixels=np.zeros(3))
    with pytest.raises(ValueError):
        FrameTensor(width=2, height=2, channels=1, pixels=np.array([0.0, 0.1, np.nan, 0.2]))


def test_error_series_frame_indices():
    es = ErrorSeries(values=[0.1, 0.2, 0.3], start_index=7)
    assert list(es.frame_indices()) == [7, 8, 9]


def test_model_shape_validation():
    with pytest.raises(ValueError):
        ReconstructorModel(
            kind=ReconstructorKind.SAE,
            layer_sizes=[4, 2, 4],
            weights=[np.zeros((2, 4)), np.zeros((4, 3))],
            biases=[np.zeros(2), np.zeros(4)],
            activation=Activation.RELU,
        )
    with pytest.raises(ValueError):
        ReconstructorModel(
            kind=ReconstructorKind.SEQ,
            layer_sizes=[8, 4],
            weights=[np.zeros((4, 8))],
            biases=[np.zeros(4)],
            activation=Activation.RELU,
            history_k=3,  # 3 * 4 != 8
        )


def test_empty_stream_rejected():
    with pytest.raises(ValueError):
        train_reconstructor(FrameStream(frames=[], frame_rate_hz=10.0), "sae")
