"""Forward simulation of coded diffraction patterns and the one-bit quantizer.

A coded diffraction pattern is the power spectrum of a masked signal,
|F(w * x0)|^2 under the unitary transform, optionally pushed through an
observation model (noise, distortion, or a diffraction-limited low-pass).
Pairs of patterns taken with independent masks are compared entrywise to
produce one-bit measurements sign(b1 - b2).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import (
    RandomSource,
    require_signal,
    require_unit,
    sample_bernoulli_mask,
    sample_complex_gaussian,
    unitary_fftn,
)

__all__ = [
    "Identity",
    "ExpNoise",
    "PoissonNoise",
    "TanhDistortion",
    "LowPass",
    "ObservationModel",
    "MeasurementSet",
    "lowpass_band",
    "cutoff_for_srf",
    "apply_lowpass",
    "forward_cdp",
    "quantize",
    "sign_compare",
    "build_measurement_set",
]


@dataclass(frozen=True)
class Identity:
    """Clean intensities, b = |F(w * x0)|^2."""


@dataclass(frozen=True)
class ExpNoise:
    """Additive exponential noise with variance `sigma`.

    sigma is measured in units of the mean clean intensity (which is 1/n for
    a unit-norm signal), so the rate of the added exponential is 1/sqrt(sigma)
    at that scale. sigma = 0 reduces to the identity model.
    """

    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class PoissonNoise:
    """Photon-count acquisition: b = eta * Poisson(clean / eta).

    `eta` is the gain in units of the mean clean intensity; smaller eta means
    more photons per entry and less noise.
    """

    eta: float

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")


@dataclass(frozen=True)
class TanhDistortion:
    """Saturating nonlinearity b = tanh(alpha * clean); deterministic and monotone."""

    alpha: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")


@dataclass(frozen=True, eq=False)
class LowPass:
    """Diffraction-limited acquisition: the power spectrum is kept on the band
    of frequencies within +-f_c per axis (scaled by the squared PSF magnitudes
    when given) and is exactly zero outside.

    Frequency k in [-f_c, f_c] maps to array index k for k >= 0 and to
    length + k for k < 0 on each axis. `magnitudes`, when given, must be an
    array of the signal shape, strictly positive on the band; values outside
    the band are ignored. With `vary_per_pair`, fresh random in-band
    magnitudes are drawn for every mask pair at acquisition time (both
    patterns of a pair share them).
    """

    f_c: int
    shape: tuple
    magnitudes: Optional[np.ndarray] = None
    vary_per_pair: bool = False

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(d) for d in self.shape))
        for d in self.shape:
            if d < 2 or d % 2 != 0:
                raise ValueError(f"signal dimensions must be even and >= 2, got {self.shape}")
        limit = min(self.shape) // 2 - 1
        if not 0 <= self.f_c <= limit:
            raise ValueError(f"f_c must lie in [0, {limit}] for shape {self.shape}, got {self.f_c}")
        if self.magnitudes is not None:
            mags = np.asarray(self.magnitudes, dtype=np.float64)
            if mags.shape != self.shape:
                raise ValueError(f"magnitudes shape {mags.shape} != signal shape {self.shape}")
            band = lowpass_band(self.shape, self.f_c)
            if np.any(mags[band] <= 0):
                raise ValueError("PSF magnitudes must be strictly positive on the band")
            object.__setattr__(self, "magnitudes", mags)

    @property
    def band_fraction(self) -> float:
        """Fraction of frequencies inside the band, (2 f_c + 1)^d / n."""
        return float((2 * self.f_c + 1) ** len(self.shape)) / float(np.prod(self.shape))

    @property
    def srf(self) -> float:
        """Super-resolution factor, the inverse of the band fraction."""
        return 1.0 / self.band_fraction


ObservationModel = Union[Identity, ExpNoise, PoissonNoise, TanhDistortion, LowPass]


def lowpass_band(shape, f_c: int) -> np.ndarray:
    """Boolean mask of the frequencies within +-f_c along every axis."""
    shape = tuple(int(d) for d in shape)
    band = np.ones(shape, dtype=bool)
    for ax, d in enumerate(shape):
        freqs = np.minimum(np.arange(d), d - np.arange(d))  # distance to DC, mod d
        ax_band = freqs <= f_c
        band &= ax_band.reshape((1,) * ax + (d,) + (1,) * (len(shape) - ax - 1))
    return band


def cutoff_for_srf(n: int, srf: float) -> int:
    """Largest-band cutoff approximating a target super-resolution factor.

    Rounds (n/srf - 1)/2 to the nearest integer and clamps it to the valid
    range [0, n/2 - 1]; srf = 1 therefore yields the fullest available band.
    """
    if srf < 1:
        raise ValueError(f"srf must be >= 1, got {srf}")
    f_c = int(round((n / srf - 1.0) / 2.0))
    return max(0, min(n // 2 - 1, f_c))


def apply_lowpass(spectrum_sq: np.ndarray, model: LowPass,
                  magnitudes: Optional[np.ndarray] = None) -> np.ndarray:
    """Multiply a power spectrum by the squared PSF magnitudes on the band and
    zero it exactly outside. Leading batch axes broadcast.

    `magnitudes` overrides the model's stored magnitudes (used for per-pair
    PSF perturbations); defaults to all ones on the band.
    """
    if not isinstance(model, LowPass):
        raise TypeError("model must be LowPass")
    if spectrum_sq.shape[-len(model.shape):] != model.shape:
        raise ValueError(f"pattern shape {spectrum_sq.shape} does not end with {model.shape}")
    band = lowpass_band(model.shape, model.f_c)
    if magnitudes is None:
        magnitudes = model.magnitudes
    if magnitudes is None:
        return np.where(band, spectrum_sq, 0.0)
    return np.where(band, spectrum_sq * magnitudes, 0.0)


def _observe(clean: np.ndarray, model: ObservationModel, rng: Optional[RandomSource],
             n: int, lowpass_mags: Optional[np.ndarray] = None) -> np.ndarray:
    """Apply the observation model to clean intensities (batched)."""
    if isinstance(model, Identity):
        return clean
    if isinstance(model, ExpNoise):
        if model.sigma == 0.0:
            return clean
        scale = np.sqrt(model.sigma) / n  # noise lives at the 1/n intensity scale
        return clean + rng.generator.exponential(scale=scale, size=clean.shape)
    if isinstance(model, PoissonNoise):
        gain = model.eta / n
        counts = rng.generator.poisson(clean / gain)
        return counts * gain
    if isinstance(model, TanhDistortion):
        return np.tanh(model.alpha * clean)
    if isinstance(model, LowPass):
        return apply_lowpass(clean, model, magnitudes=lowpass_mags)
    raise TypeError(f"unknown observation model {model!r}")


def forward_cdp(x0: np.ndarray, w: np.ndarray, model: ObservationModel,
                rng: Optional[RandomSource] = None) -> np.ndarray:
    """One coded diffraction pattern theta(|F(w * x0)|^2).

    Parameters
    ----------
    x0 : complex array, unit norm (tolerance 1e-6)
    w : mask of the same shape as x0; a leading batch axis is allowed
    model : observation model; stochastic models consume `rng`,
        deterministic ones ignore it
    """
    x0 = np.asarray(x0)
    require_signal(x0, "x0")
    require_unit(x0, name="x0")
    w = np.asarray(w)
    if w.shape[-x0.ndim:] != x0.shape:
        raise ValueError(f"mask shape {w.shape} does not match signal shape {x0.shape}")
    if rng is None and isinstance(model, (ExpNoise, PoissonNoise)) and \
            not (isinstance(model, ExpNoise) and model.sigma == 0.0):
        raise ValueError("stochastic observation models need a RandomSource")
    clean = np.abs(unitary_fftn(w * x0, x0.ndim)) ** 2
    return _observe(clean, model, rng, x0.size)


def sign_compare(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Entrywise sign(a - b) with the tie rules of the quantizer.

    Exact ties at zero (the structurally dead band) give 0; nonzero ties give
    +1. No epsilon window: independent noisy intensities only collide at
    structural zeros or on quantized (integer-count) values.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    s = np.sign(a - b).astype(np.int8)
    s[(a == b) & (a != 0)] = 1
    return s


def quantize(b1: np.ndarray, b2: np.ndarray) -> np.ndarray:
    """One-bit pattern sign(b1 - b2) in {-1, 0, +1} (int8)."""
    return sign_compare(b1, b2)


@dataclass
class MeasurementSet:
    """r mask pairs with their one-bit patterns (and optionally the raw
    intensity pairs, which the refinement and sub-exponential solvers need).

    masks1, masks2 : complex, shape (r, *signal_shape)
    signs : int8 in {-1, 0, +1}, shape (r, *signal_shape)
    intensities1/2 : float or None, same shape as signs
    """

    masks1: np.ndarray
    masks2: np.ndarray
    signs: np.ndarray
    model: ObservationModel
    mask_kind: str = "gaussian"
    intensities1: Optional[np.ndarray] = None
    intensities2: Optional[np.ndarray] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.masks1.shape != self.masks2.shape or self.masks1.shape != self.signs.shape:
            raise ValueError("masks and sign patterns must share one shape")
        if self.masks1.ndim < 2 or self.masks1.shape[0] < 1:
            raise ValueError("need at least one mask pair with a signal axis")
        for b in (self.intensities1, self.intensities2):
            if b is not None and b.shape != self.signs.shape:
                raise ValueError("retained intensities must match the sign patterns")

    @property
    def r(self) -> int:
        return self.masks1.shape[0]

    @property
    def shape(self) -> tuple:
        return self.masks1.shape[1:]

    @property
    def n(self) -> int:
        return int(np.prod(self.shape))

    @property
    def has_intensities(self) -> bool:
        return self.intensities1 is not None and self.intensities2 is not None


def _draw_masks(shape, kind: str, rng: RandomSource, bernoulli_p: float) -> np.ndarray:
    if kind == "gaussian":
        return sample_complex_gaussian(shape, rng)
    if kind == "bernoulli":
        return sample_bernoulli_mask(shape, bernoulli_p, rng)
    raise ValueError(f"unknown mask kind {kind!r}")


def build_measurement_set(x0: np.ndarray, r: int, model: ObservationModel,
                          rng: RandomSource, mask_kind: str = "gaussian",
                          keep_intensities: bool = False,
                          bernoulli_p: float = 0.8) -> MeasurementSet:
    """Draw 2r independent masks, observe both patterns of every pair with
    independent noise, and quantize.

    Draw order is fixed (masks1, masks2, per-pair PSF magnitudes if any,
    noise for side 1, noise for side 2) so a given RandomSource always yields
    the same set.
    """
    if r < 1:
        raise ValueError(f"need r >= 1 mask pairs, got {r}")
    x0 = np.asarray(x0)
    require_signal(x0, "x0")
    require_unit(x0, name="x0")
    if isinstance(model, LowPass) and model.shape != x0.shape:
        raise ValueError(f"LowPass model shape {model.shape} != signal shape {x0.shape}")

    batch = (r,) + x0.shape
    w1 = _draw_masks(batch, mask_kind, rng, bernoulli_p)
    w2 = _draw_masks(batch, mask_kind, rng, bernoulli_p)

    mags = None
    if isinstance(model, LowPass) and model.vary_per_pair:
        band = lowpass_band(model.shape, model.f_c)
        mags = rng.generator.uniform(0.5, 1.5, size=batch) * band

    clean1 = np.abs(unitary_fftn(w1 * x0, x0.ndim)) ** 2
    clean2 = np.abs(unitary_fftn(w2 * x0, x0.ndim)) ** 2
    b1 = _observe(clean1, model, rng, x0.size, lowpass_mags=mags)
    b2 = _observe(clean2, model, rng, x0.size, lowpass_mags=mags)
    y = quantize(b1, b2)

    return MeasurementSet(
        masks1=w1, masks2=w2, signs=y, model=model, mask_kind=mask_kind,
        intensities1=b1 if keep_intensities else None,
        intensities2=b2 if keep_intensities else None,
        seed=rng.seed,
    )
