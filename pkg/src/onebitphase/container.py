"""Binary containers for measurement sets and recovery results.

The exact byte layout is specified in FORMAT.md at the repository root.
Both files are a magic tag, a length-prefixed canonical JSON header, and
fixed-order little-endian payload blocks, so identical inputs always
serialize to identical bytes.
"""

from __future__ import annotations

import json
import math
from typing import Optional

import numpy as np

from .measurement import (
    ExpNoise,
    Identity,
    LowPass,
    MeasurementSet,
    ObservationModel,
    PoissonNoise,
    TanhDistortion,
)
from .solvers import RecoveryResult

__all__ = [
    "FormatError",
    "save_measurement_set",
    "load_measurement_set",
    "save_result",
    "load_result",
    "model_to_dict",
    "model_from_dict",
]

MEASUREMENT_MAGIC = b"OB1MSET\x01"
RESULT_MAGIC = b"OB1RES\x01"


class FormatError(ValueError):
    """A container or image file does not match its documented layout."""


def model_to_dict(model: ObservationModel) -> dict:
    """JSON-safe descriptor of an observation model (magnitudes go to the
    binary payload, not the header)."""
    if isinstance(model, Identity):
        return {"kind": "identity"}
    if isinstance(model, ExpNoise):
        return {"kind": "exp-noise", "sigma": model.sigma}
    if isinstance(model, PoissonNoise):
        return {"kind": "poisson", "eta": model.eta}
    if isinstance(model, TanhDistortion):
        return {"kind": "tanh", "alpha": model.alpha}
    if isinstance(model, LowPass):
        return {
            "kind": "lowpass",
            "f_c": model.f_c,
            "shape": list(model.shape),
            "vary_per_pair": bool(model.vary_per_pair),
            "has_magnitudes": model.magnitudes is not None,
        }
    raise TypeError(f"unknown observation model {model!r}")


def model_from_dict(d: dict, magnitudes: Optional[np.ndarray] = None) -> ObservationModel:
    kind = d.get("kind")
    if kind == "identity":
        return Identity()
    if kind == "exp-noise":
        return ExpNoise(sigma=float(d["sigma"]))
    if kind == "poisson":
        return PoissonNoise(eta=float(d["eta"]))
    if kind == "tanh":
        return TanhDistortion(alpha=float(d["alpha"]))
    if kind == "lowpass":
        return LowPass(f_c=int(d["f_c"]), shape=tuple(d["shape"]),
                       magnitudes=magnitudes, vary_per_pair=bool(d["vary_per_pair"]))
    raise FormatError(f"unknown model kind {kind!r}")


def _canonical_json(header: dict) -> bytes:
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _complex_block(a: np.ndarray) -> bytes:
    out = np.empty(a.size * 2, dtype="<f8")
    out[0::2] = a.real.ravel()
    out[1::2] = a.imag.ravel()
    return out.tobytes()


class _Reader:
    """Sequential payload reader that reports the failing byte offset."""

    def __init__(self, buf: bytes, offset: int):
        self.buf = buf
        self.pos = offset

    def take(self, count: int, what: str) -> bytes:
        end = self.pos + count
        if end > len(self.buf):
            raise FormatError(f"truncated file: {what} needs bytes "
                              f"[{self.pos}, {end}) but the file has {len(self.buf)}")
        chunk = self.buf[self.pos:end]
        self.pos = end
        return chunk

    def floats(self, count: int, what: str) -> np.ndarray:
        return np.frombuffer(self.take(8 * count, what), dtype="<f8")

    def complexes(self, count: int, what: str) -> np.ndarray:
        flat = self.floats(2 * count, what)
        return flat[0::2] + 1j * flat[1::2]

    def done(self):
        if self.pos != len(self.buf):
            raise FormatError(f"trailing bytes after offset {self.pos}")


def _read_header(buf: bytes, magic: bytes) -> tuple[dict, int]:
    if len(buf) < len(magic) + 4:
        raise FormatError(f"file too short for magic and header length "
                          f"({len(buf)} bytes)")
    if buf[:len(magic)] != magic:
        raise FormatError(f"bad magic {buf[:len(magic)]!r}, expected {magic!r}")
    hlen = int.from_bytes(buf[len(magic):len(magic) + 4], "little")
    start = len(magic) + 4
    if start + hlen > len(buf):
        raise FormatError(f"truncated file: header needs bytes "
                          f"[{start}, {start + hlen}) but the file has {len(buf)}")
    try:
        header = json.loads(buf[start:start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"malformed JSON header: {exc}") from exc
    return header, start + hlen


def save_measurement_set(ms: MeasurementSet, path,
                         truth: Optional[np.ndarray] = None) -> None:
    """Write a measurement set (and optional ground-truth signal)."""
    header = {
        "shape": list(ms.shape),
        "r": ms.r,
        "mask_kind": ms.mask_kind,
        "model": model_to_dict(ms.model),
        "has_intensities": ms.has_intensities,
        "has_truth": truth is not None,
        "seed": ms.seed,
    }
    hjson = _canonical_json(header)
    parts = [MEASUREMENT_MAGIC, len(hjson).to_bytes(4, "little"), hjson]
    parts.append(_complex_block(ms.masks1))
    parts.append(_complex_block(ms.masks2))
    parts.append(ms.signs.astype(np.int8).tobytes())  # -1 -> 0xFF, 0 -> 0x00, +1 -> 0x01
    if isinstance(ms.model, LowPass) and ms.model.magnitudes is not None:
        parts.append(ms.model.magnitudes.astype("<f8").tobytes())
    if ms.has_intensities:
        parts.append(ms.intensities1.astype("<f8").tobytes())
        parts.append(ms.intensities2.astype("<f8").tobytes())
    if truth is not None:
        if truth.shape != ms.shape:
            raise ValueError(f"truth shape {truth.shape} != signal shape {ms.shape}")
        parts.append(_complex_block(np.asarray(truth, dtype=np.complex128)))
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_measurement_set(path) -> tuple[MeasurementSet, Optional[np.ndarray]]:
    """Read a measurement set; returns (set, truth or None)."""
    with open(path, "rb") as fh:
        buf = fh.read()
    header, offset = _read_header(buf, MEASUREMENT_MAGIC)
    try:
        shape = tuple(int(d) for d in header["shape"])
        r = int(header["r"])
        mask_kind = header["mask_kind"]
        model_dict = header["model"]
        has_intens = bool(header["has_intensities"])
        has_truth = bool(header["has_truth"])
        seed = header["seed"]
    except KeyError as exc:
        raise FormatError(f"header missing field {exc}") from exc
    n = int(np.prod(shape))
    if r < 1 or n < 2:
        raise FormatError(f"invalid dimensions r={r}, shape={shape}")

    rd = _Reader(buf, offset)
    w1 = rd.complexes(r * n, "masks1").reshape((r,) + shape)
    w2 = rd.complexes(r * n, "masks2").reshape((r,) + shape)
    signs = np.frombuffer(rd.take(r * n, "signs"), dtype=np.int8).reshape((r,) + shape)
    if np.any(np.abs(signs) > 1):
        raise FormatError("sign bytes outside {-1, 0, +1}")
    mags = None
    if model_dict.get("kind") == "lowpass" and model_dict.get("has_magnitudes"):
        mags = rd.floats(n, "magnitudes").reshape(shape)
    b1 = b2 = None
    if has_intens:
        b1 = rd.floats(r * n, "intensities1").reshape((r,) + shape).copy()
        b2 = rd.floats(r * n, "intensities2").reshape((r,) + shape).copy()
    truth = None
    if has_truth:
        truth = rd.complexes(n, "truth").reshape(shape)
    rd.done()

    model = model_from_dict(model_dict, magnitudes=mags)
    ms = MeasurementSet(masks1=w1.copy(), masks2=w2.copy(), signs=signs.copy(),
                        model=model, mask_kind=mask_kind,
                        intensities1=b1, intensities2=b2,
                        seed=None if seed is None else int(seed))
    return ms, truth


def save_result(result: RecoveryResult, path, method: str, shape,
                err_value: Optional[float] = None,
                seed: Optional[int] = None) -> None:
    """Write a recovery result (estimate layout documented in FORMAT.md)."""
    lam = result.lambda_hat
    header = {
        "shape": list(shape),
        "method": method,
        "lambda_hat": None if (lam is None or math.isnan(lam)) else float(lam),
        "iterations": int(result.iterations),
        "converged": bool(result.converged),
        "err": None if err_value is None else float(err_value),
        "seed": seed,
    }
    hjson = _canonical_json(header)
    with open(path, "wb") as fh:
        fh.write(RESULT_MAGIC)
        fh.write(len(hjson).to_bytes(4, "little"))
        fh.write(hjson)
        fh.write(_complex_block(np.asarray(result.x_hat, dtype=np.complex128)))


def load_result(path) -> tuple[RecoveryResult, dict]:
    """Read a recovery result; returns (result, header dict)."""
    with open(path, "rb") as fh:
        buf = fh.read()
    header, offset = _read_header(buf, RESULT_MAGIC)
    try:
        shape = tuple(int(d) for d in header["shape"])
    except KeyError as exc:
        raise FormatError(f"header missing field {exc}") from exc
    n = int(np.prod(shape))
    rd = _Reader(buf, offset)
    x_hat = rd.complexes(n, "estimate").reshape(shape)
    rd.done()
    lam = header.get("lambda_hat")
    result = RecoveryResult(
        x_hat=x_hat.copy(),
        lambda_hat=float("nan") if lam is None else float(lam),
        iterations=int(header.get("iterations", 0)),
        converged=bool(header.get("converged", False)),
        residual_history=[],
    )
    return result, header
