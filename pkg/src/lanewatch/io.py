"""File formats: frame binaries, CSV logs, and JSON artifacts.

Frame stream binary ("FRM1"): 4 magic bytes, then four little-endian u32
fields (count, width, height, channels), then count*W*H*C little-endian
IEEE-754 32-bit floats, frame-major, row-major, channel-last.  Read
errors carry the byte offset of the problem.

CSV files are LF-terminated with a fixed header; floats use Python's
shortest round-trip representation.  The fitted-parameters JSON instead
prints 17 significant digits so the decimal literals are exact float64
round-trips even for consumers with naive parsers.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .detector import Decision, DetectorState
from .errors import FormatError
from .evalkit import WindowLabel, WindowKind
from .gammafit import GammaParams, ThresholdSpec
from .reconstruct import (
    Activation,
    ErrorSeries,
    FrameStream,
    FrameTensor,
    ReconstructorKind,
    ReconstructorModel,
)
from .scenario import MisbehaviourLog

__all__ = [
    "write_frames",
    "read_frames",
    "write_error_csv",
    "read_error_csv",
    "write_misbehaviour_csv",
    "read_misbehaviour_csv",
    "write_intensity_csv",
    "write_decision_csv",
    "write_labels_csv",
    "read_labels_csv",
    "write_model_json",
    "read_model_json",
    "write_params_json",
    "read_params_json",
    "write_report_json",
    "write_curve_csv",
    "write_state_json",
    "read_state_json",
]

FRAME_MAGIC = b"FRM1"
_HEADER = struct.Struct("<IIII")


def write_frames(path: str | Path, stream: FrameStream) -> None:
    if stream.frames:
        w, h, c = stream.frame_shape
    else:
        w = h = c = 1
    payload = bytearray()
    payload += FRAME_MAGIC
    payload += _HEADER.pack(len(stream.frames), w, h, c)
    for frame in stream.frames:
        payload += frame.pixels.astype("<f4").tobytes()
    Path(path).write_bytes(bytes(payload))


def read_frames(path: str | Path, frame_rate_hz: float = 30.0) -> FrameStream:
    """Load an FRM1 file; frame_rate_hz is caller-supplied metadata, the
    format itself does not store it."""
    data = Path(path).read_bytes()
    if len(data) < 4:
        raise FormatError(f"{path}: truncated before magic", byte_offset=len(data))
    if data[:4] != FRAME_MAGIC:
        raise FormatError(
            f"{path}: bad magic {data[:4]!r}, expected {FRAME_MAGIC!r}", byte_offset=0
        )
    if len(data) < 4 + _HEADER.size:
        raise FormatError(f"{path}: truncated header", byte_offset=len(data))
    count, width, height, channels = _HEADER.unpack_from(data, 4)
    if count and (width == 0 or height == 0 or channels == 0):
        raise FormatError(
            f"{path}: zero frame dimension {width}x{height}x{channels}", byte_offset=4
        )
    body_offset = 4 + _HEADER.size
    expected = count * width * height * channels * 4
    actual = len(data) - body_offset
    if actual != expected:
        raise FormatError(
            f"{path}: expected {expected} bytes of frame data, found {actual}",
            byte_offset=body_offset + min(actual, expected),
        )
    per_frame = width * height * channels
    raw = np.frombuffer(data, dtype="<f4", offset=body_offset)
    frames = []
    for i in range(count):
        pixels = raw[i * per_frame : (i + 1) * per_frame].astype(np.float64)
        try:
            frames.append(
                FrameTensor(width=width, height=height, channels=channels, pixels=pixels)
            )
        except ValueError as exc:
            raise FormatError(
                f"{path}: frame {i}: {exc}", byte_offset=body_offset + i * per_frame * 4
            ) from exc
    return FrameStream(frames=frames, frame_rate_hz=frame_rate_hz)


def _write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def _read_rows(path: str | Path, header: str) -> list[tuple[int, list[str]]]:
    """CSV rows as (line_number, cells); verifies the header line."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError(f"{path}: empty file, expected header '{header}'")
    if lines[0] != header:
        raise FormatError(f"{path}: line 1: header '{lines[0]}', expected '{header}'")
    return [(i, line.split(",")) for i, line in enumerate(lines[1:], start=2) if line]


def _parse_int(path, line_no, cell: str) -> int:
    try:
        return int(cell)
    except ValueError as exc:
        raise FormatError(f"{path}: line {line_no}: bad integer '{cell}'") from exc


def _parse_float(path, line_no, cell: str) -> float:
    try:
        return float(cell)
    except ValueError as exc:
        raise FormatError(f"{path}: line {line_no}: bad number '{cell}'") from exc


def write_error_csv(path: str | Path, series: ErrorSeries) -> None:
    lines = ["frame_index,error"]
    for idx, value in zip(series.frame_indices(), series.values):
        lines.append(f"{idx},{float(value)!r}")
    _write_text(path, "\n".join(lines) + "\n")


def read_error_csv(path: str | Path) -> ErrorSeries:
    rows = _read_rows(path, "frame_index,error")
    indices: list[int] = []
    values: list[float] = []
    for line_no, cells in rows:
        if len(cells) != 2:
            raise FormatError(f"{path}: line {line_no}: expected 2 columns")
        indices.append(_parse_int(path, line_no, cells[0]))
        values.append(_parse_float(path, line_no, cells[1]))
    if not indices:
        raise FormatError(f"{path}: no data rows")
    start = indices[0]
    for offset, idx in enumerate(indices):
        if idx != start + offset:
            raise FormatError(
                f"{path}: frame indices must be contiguous, "
                f"saw {idx} where {start + offset} was expected"
            )
    try:
        return ErrorSeries(values=np.asarray(values), start_index=start)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_misbehaviour_csv(path: str | Path, log: MisbehaviourLog) -> None:
    lines = ["frame_index,misbehaviour"]
    for idx, flag in enumerate(log.flags):
        lines.append(f"{idx},{int(flag)}")
    _write_text(path, "\n".join(lines) + "\n")


def read_misbehaviour_csv(path: str | Path) -> MisbehaviourLog:
    rows = _read_rows(path, "frame_index,misbehaviour")
    flags: list[bool] = []
    for line_no, cells in rows:
        if len(cells) != 2:
            raise FormatError(f"{path}: line {line_no}: expected 2 columns")
        idx = _parse_int(path, line_no, cells[0])
        if idx != len(flags):
            raise FormatError(
                f"{path}: line {line_no}: frame index {idx}, expected {len(flags)}"
            )
        value = _parse_int(path, line_no, cells[1])
        if value not in (0, 1):
            raise FormatError(f"{path}: line {line_no}: flag must be 0 or 1, got {value}")
        flags.append(bool(value))
    return MisbehaviourLog(flags=np.asarray(flags, dtype=bool))


def write_intensity_csv(path: str | Path, trace: np.ndarray) -> None:
    lines = ["frame_index,intensity"]
    for idx, value in enumerate(np.asarray(trace, dtype=float)):
        lines.append(f"{idx},{float(value)!r}")
    _write_text(path, "\n".join(lines) + "\n")


def write_decision_csv(
    path: str | Path, start_index: int, decisions: list[Decision]
) -> None:
    lines = ["frame_index,decision"]
    for offset, decision in enumerate(decisions):
        lines.append(f"{start_index + offset},{decision.value}")
    _write_text(path, "\n".join(lines) + "\n")


def write_labels_csv(path: str | Path, labels: list[WindowLabel]) -> None:
    lines = ["start,length,kind"]
    for w in labels:
        lines.append(f"{w.start},{w.length},{w.kind.value}")
    _write_text(path, "\n".join(lines) + "\n")


def read_labels_csv(path: str | Path) -> list[WindowLabel]:
    rows = _read_rows(path, "start,length,kind")
    labels: list[WindowLabel] = []
    for line_no, cells in rows:
        if len(cells) != 3:
            raise FormatError(f"{path}: line {line_no}: expected 3 columns")
        try:
            kind = WindowKind(cells[2])
        except ValueError as exc:
            raise FormatError(f"{path}: line {line_no}: unknown kind '{cells[2]}'") from exc
        labels.append(
            WindowLabel(
                start=_parse_int(path, line_no, cells[0]),
                length=_parse_int(path, line_no, cells[1]),
                kind=kind,
            )
        )
    return labels


def write_model_json(path: str | Path, model: ReconstructorModel) -> None:
    doc = {
        "kind": model.kind.value,
        "layer_sizes": model.layer_sizes,
        "history_k": model.history_k,
        "activation": model.activation.value,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }
    _write_text(path, json.dumps(doc, indent=1) + "\n")


def _load_json(path: str | Path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc.msg}", byte_offset=exc.pos) from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: expected a JSON object")
    return doc


def read_model_json(path: str | Path) -> ReconstructorModel:
    doc = _load_json(path)
    missing = {"kind", "layer_sizes", "history_k", "activation", "weights", "biases"} - set(doc)
    if missing:
        raise FormatError(f"{path}: missing model fields {sorted(missing)}")
    try:
        return ReconstructorModel(
            kind=ReconstructorKind(doc["kind"]),
            layer_sizes=[int(s) for s in doc["layer_sizes"]],
            weights=[np.asarray(w, dtype=np.float64) for w in doc["weights"]],
            biases=[np.asarray(b, dtype=np.float64) for b in doc["biases"]],
            activation=Activation(doc["activation"]),
            history_k=None if doc["history_k"] is None else int(doc["history_k"]),
        )
    except (ValueError, TypeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_params_json(
    path: str | Path,
    params: GammaParams,
    threshold: ThresholdSpec,
    sample_count: int,
) -> None:
    text = (
        "{\n"
        f'  "alpha": {params.shape_alpha:.17g},\n'
        f'  "rate": {params.rate_beta:.17g},\n'
        f'  "epsilon": {threshold.epsilon:.17g},\n'
        f'  "theta": {threshold.theta:.17g},\n'
        f'  "sample_count": {int(sample_count)}\n'
        "}\n"
    )
    _write_text(path, text)


def read_params_json(path: str | Path) -> tuple[GammaParams, ThresholdSpec, int]:
    doc = _load_json(path)
    missing = {"alpha", "rate", "epsilon", "theta", "sample_count"} - set(doc)
    if missing:
        raise FormatError(f"{path}: missing parameter fields {sorted(missing)}")
    try:
        params = GammaParams(shape_alpha=float(doc["alpha"]), rate_beta=float(doc["rate"]))
        threshold = ThresholdSpec(epsilon=float(doc["epsilon"]), theta=float(doc["theta"]))
    except (ValueError, TypeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return params, threshold, int(doc["sample_count"])


def write_report_json(path: str | Path, report: dict) -> None:
    _write_text(path, json.dumps(report, indent=1) + "\n")


def write_curve_csv(
    path: str | Path, header: str, rows: list[tuple[float, float, float]]
) -> None:
    lines = [header]
    for theta, x, y in rows:
        lines.append(f"{float(theta)!r},{float(x)!r},{float(y)!r}")
    _write_text(path, "\n".join(lines) + "\n")


def write_state_json(path: str | Path, state: DetectorState) -> None:
    _write_text(path, json.dumps(state.to_json_dict(), indent=1) + "\n")


def read_state_json(path: str | Path) -> DetectorState:
    doc = _load_json(path)
    missing = {"frames_seen", "cooldown_remaining", "alarms"} - set(doc)
    if missing:
        raise FormatError(f"{path}: missing state fields {sorted(missing)}")
    try:
        return DetectorState.from_json_dict(doc)
    except (ValueError, TypeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
