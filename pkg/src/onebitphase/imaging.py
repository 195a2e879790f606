"""Two-dimensional recovery: per-channel image pipelines and PGM/PPM files.

Everything from the one-dimensional path carries over by replacing vectors
with 2D arrays and the transform with the unitary 2D FFT; each color channel
is normalized, acquired, and recovered independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .container import FormatError
from .core import RandomSource, unitary_fftn, unitary_ifftn
from .measurement import LowPass, ObservationModel, build_measurement_set
from .operators import OneBitOperator, SubExpOperator
from .solvers import AMConfig, PowerConfig, RecoveryResult, alt_min, err, power_method

__all__ = [
    "ImagePlane",
    "dft2",
    "idft2",
    "load_image",
    "save_image",
    "psnr",
    "recover_channel",
    "recover_image",
]


def dft2(plane: np.ndarray) -> np.ndarray:
    """Unitary 2D DFT (rows then columns); Parseval holds to rounding."""
    plane = np.asarray(plane)
    if plane.ndim != 2:
        raise ValueError(f"expected a 2D array, got shape {plane.shape}")
    if plane.shape[0] % 2 or plane.shape[1] % 2:
        raise ValueError(f"dimensions must be even, got {plane.shape}")
    return unitary_fftn(plane, 2)


def idft2(plane: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dft2`."""
    plane = np.asarray(plane)
    if plane.ndim != 2:
        raise ValueError(f"expected a 2D array, got shape {plane.shape}")
    if plane.shape[0] % 2 or plane.shape[1] % 2:
        raise ValueError(f"dimensions must be even, got {plane.shape}")
    return unitary_ifftn(plane, 2)


@dataclass
class ImagePlane:
    """Unit-norm channels plus the scalars that restore the original range.

    channels: (c, h, w) float64, each slice unit-norm; c is 1 or 3.
    scales: (c,) the original channel norms (pixels in [0, 1]).
    """

    channels: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        if self.channels.ndim != 3 or self.channels.shape[0] not in (1, 3):
            raise ValueError(f"channels must be (1|3, h, w), got {self.channels.shape}")
        h, w = self.channels.shape[1:]
        if h % 2 or w % 2 or h < 2 or w < 2:
            raise ValueError(f"height and width must be even and >= 2, got {h}x{w}")
        if self.scales.shape != (self.channels.shape[0],):
            raise ValueError("one scale per channel required")

    @property
    def height(self) -> int:
        return self.channels.shape[1]

    @property
    def width(self) -> int:
        return self.channels.shape[2]

    @property
    def num_channels(self) -> int:
        return self.channels.shape[0]

    @classmethod
    def from_pixels(cls, pixels: np.ndarray) -> "ImagePlane":
        """Build from (h, w) or (h, w, 3) pixel values in [0, 1]."""
        pixels = np.asarray(pixels, dtype=np.float64)
        if pixels.ndim == 2:
            pixels = pixels[:, :, None]
        if pixels.ndim != 3 or pixels.shape[2] not in (1, 3):
            raise ValueError(f"expected (h, w) or (h, w, 3) pixels, got {pixels.shape}")
        chans = np.moveaxis(pixels, 2, 0).copy()
        scales = np.linalg.norm(chans.reshape(chans.shape[0], -1), axis=1)
        if np.any(scales == 0):
            raise ValueError("cannot normalize an identically zero channel")
        return cls(channels=chans / scales[:, None, None], scales=scales)

    def to_pixels(self) -> np.ndarray:
        """De-normalized pixels, (h, w) for grayscale or (h, w, 3) for RGB."""
        pixels = np.moveaxis(self.channels * self.scales[:, None, None], 0, 2)
        return pixels[:, :, 0] if pixels.shape[2] == 1 else pixels


def _parse_pnm_header(buf: bytes):
    """Parse the P5/P6 header; returns (channels, width, height, data offset)."""
    if len(buf) < 2:
        raise FormatError("file too short for a PGM/PPM magic (2 bytes needed)")
    magic = buf[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise FormatError(f"unsupported magic {magic!r}; only binary P5/P6 are handled")

    pos = 2
    fields = []
    while len(fields) < 3:
        # skip whitespace and '#' comment lines between header fields
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < len(buf) and buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        token = buf[start:pos]
        if not token:
            raise FormatError(f"malformed header: field {len(fields) + 1} missing at byte {start}")
        if not token.isdigit():
            raise FormatError(f"malformed header: non-numeric token {token!r} at byte {start}")
        fields.append(int(token))
    if pos >= len(buf):
        raise FormatError(f"truncated file: pixel data expected after byte {pos}")
    pos += 1  # exactly one whitespace byte separates the header from the payload

    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval}; only 8-bit (255) is handled")
    return channels, width, height, pos


def load_image(path) -> ImagePlane:
    """Read a binary PGM (P5) or PPM (P6) file; pixels map to [0, 1]."""
    with open(path, "rb") as fh:
        buf = fh.read()
    channels, width, height, pos = _parse_pnm_header(buf)
    count = width * height * channels
    if len(buf) - pos < count:
        raise FormatError(f"truncated payload: need {count} bytes at offset {pos}, "
                          f"file ends at {len(buf)}")
    raw = np.frombuffer(buf[pos:pos + count], dtype=np.uint8)
    pixels = raw.reshape(height, width, channels).astype(np.float64) / 255.0
    return ImagePlane.from_pixels(pixels)


def psnr(reference: np.ndarray, recovered: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB between pixel arrays in [0, 1]
    (peak value 1); infinite for an exact match."""
    reference = np.asarray(reference, dtype=np.float64)
    recovered = np.asarray(recovered, dtype=np.float64)
    if reference.shape != recovered.shape:
        raise ValueError(f"shape mismatch: {reference.shape} vs {recovered.shape}")
    mse = float(np.mean((reference - recovered) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(-10.0 * np.log10(mse))


def save_image(plane: ImagePlane, path) -> None:
    """Write 8-bit binary PGM (1 channel) or PPM (3 channels)."""
    pixels = plane.to_pixels()
    if pixels.ndim == 2:
        pixels = pixels[:, :, None]
    raw = np.clip(np.rint(pixels * 255.0), 0, 255).astype(np.uint8)
    magic = b"P5" if raw.shape[2] == 1 else b"P6"
    header = magic + f"\n{plane.width} {plane.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(raw.tobytes())


def recover_channel(x0: np.ndarray, r: int, model: ObservationModel,
                    rng: RandomSource, init: str = "onebit",
                    refine: bool = False, t0: int = 50,
                    mask_kind: str = "gaussian",
                    power: PowerConfig | None = None):
    """Acquire and recover one unit-norm 2D channel.

    Simulates the one-bit acquisition of x0 (data stream rng.derive(0),
    start vector rng.derive(1)), runs the spectral method selected by `init`
    ("onebit" or "subexp"), optionally refines with t0 alternating-
    minimization iterations, and fixes the global phase by rotating the
    estimate to correlate positively with the all-ones reference.

    Returns (RecoveryResult, real-valued recovered array).
    """
    if init not in ("onebit", "subexp"):
        raise ValueError(f"init must be onebit or subexp, got {init!r}")
    if refine and isinstance(model, LowPass):
        raise ValueError("refinement needs full-band intensities; "
                         "low-pass acquisition supports the one-bit path only")
    x0 = np.asarray(x0, dtype=np.complex128)
    keep = refine or init == "subexp"
    ms = build_measurement_set(x0, r, model, rng.derive(0), mask_kind=mask_kind,
                               keep_intensities=keep)
    op = OneBitOperator(ms) if init == "onebit" else SubExpOperator(ms)
    result = power_method(op, power or PowerConfig(), rng=rng.derive(1))
    if refine:
        refined = alt_min(ms, result.x_hat, AMConfig(t0=t0))
        result = RecoveryResult(
            x_hat=refined.x_hat, lambda_hat=result.lambda_hat,
            iterations=result.iterations + refined.iterations,
            converged=result.converged and refined.converged,
            residual_history=refined.residual_history)

    total = result.x_hat.sum()
    aligned = result.x_hat if total == 0 else result.x_hat * (np.conj(total) / abs(total))
    return result, aligned.real


def recover_image(img: ImagePlane, r: int, model: ObservationModel, seed: int,
                  init: str = "onebit", refine: bool = False, t0: int = 50,
                  mask_kind: str = "gaussian",
                  power: PowerConfig | None = None):
    """Recover every channel independently (channel c uses the stream
    RandomSource(seed).derive(c)).

    Returns (recovered ImagePlane, [RecoveryResult per channel],
    [error per channel]).
    """
    base = RandomSource(seed)
    rec_pixels = np.empty((img.height, img.width, img.num_channels))
    results = []
    errors = []
    for c in range(img.num_channels):
        x0 = img.channels[c].astype(np.complex128)
        result, real_rec = recover_channel(x0, r, model, base.derive(c),
                                           init=init, refine=refine, t0=t0,
                                           mask_kind=mask_kind, power=power)
        results.append(result)
        errors.append(err(result.x_hat, x0))
        rec_pixels[:, :, c] = np.clip(real_rec * img.scales[c], 0.0, 1.0)
    if img.num_channels == 1:
        recovered = ImagePlane.from_pixels(rec_pixels[:, :, 0])
    else:
        recovered = ImagePlane.from_pixels(rec_pixels)
    return recovered, results, errors
