"""The signal-to-noise constant of the one-bit quantizer.

For each observation model, the constant is the expectation of
<sign(theta(E1) - theta(E2)), E1 - E2> over independent unit-mean exponential
pairs. It is the top eigenvalue of the expected one-bit operator and governs
how many mask pairs a given accuracy needs. Closed forms exist for the
identity, exponential-noise, and low-pass models; everything is also
estimable by direct Monte Carlo simulation of the defining expectation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import RandomSource
from .measurement import (
    ExpNoise,
    Identity,
    LowPass,
    ObservationModel,
    PoissonNoise,
    TanhDistortion,
    lowpass_band,
    sign_compare,
)

__all__ = ["SnrEstimate", "snr_closed_form", "snr_monte_carlo"]


@dataclass(frozen=True)
class SnrEstimate:
    value: float
    stderr: float  # 0 for closed forms
    samples: int   # 0 for closed forms
    empirical: bool = False  # True when the model has no formula in theory


def snr_closed_form(model: ObservationModel) -> Optional[SnrEstimate]:
    """Closed-form constant, or None when only Monte Carlo is available.

    identity -> 1; exponential noise of variance sigma ->
    (1 + 2 sqrt(sigma)) / (1 + sqrt(sigma))^2; low-pass -> the in-band
    fraction of frequencies, i.e. the inverse super-resolution factor.
    Saturation and Poisson models have no closed form.
    """
    if isinstance(model, Identity):
        return SnrEstimate(1.0, 0.0, 0)
    if isinstance(model, ExpNoise):
        root = np.sqrt(model.sigma)
        return SnrEstimate(float((1.0 + 2.0 * root) / (1.0 + root) ** 2), 0.0, 0)
    if isinstance(model, LowPass):
        return SnrEstimate(model.band_fraction, 0.0, 0)
    if isinstance(model, (TanhDistortion, PoissonNoise)):
        return None
    raise TypeError(f"unknown observation model {model!r}")


def snr_monte_carlo(model: ObservationModel, samples: int,
                    rng: RandomSource) -> SnrEstimate:
    """Monte Carlo estimate of the defining expectation.

    Draws unit-exponential pairs, applies the observation model (independent
    noise per side for stochastic models; for low-pass, an in-band indicator
    with the band fraction as probability plus a shared positive magnitude),
    and averages sign(theta(E1) - theta(E2)) * (E1 - E2). Ties follow the
    quantizer convention. Reported with the standard error of the mean.
    """
    if samples < 1000:
        raise ValueError(f"need at least 1000 samples, got {samples}")
    gen = rng.generator
    e1 = gen.exponential(size=samples)
    e2 = gen.exponential(size=samples)

    if isinstance(model, Identity):
        t1, t2 = e1, e2
    elif isinstance(model, ExpNoise):
        if model.sigma == 0.0:
            t1, t2 = e1, e2
        else:
            scale = np.sqrt(model.sigma)
            t1 = e1 + gen.exponential(scale=scale, size=samples)
            t2 = e2 + gen.exponential(scale=scale, size=samples)
    elif isinstance(model, PoissonNoise):
        t1 = gen.poisson(e1 / model.eta).astype(np.float64)
        t2 = gen.poisson(e2 / model.eta).astype(np.float64)
    elif isinstance(model, TanhDistortion):
        t1 = np.tanh(model.alpha * e1)
        t2 = np.tanh(model.alpha * e2)
    elif isinstance(model, LowPass):
        # Mixture over frequencies: a sample is in-band with the band
        # fraction as probability, where both sides share one positive PSF
        # magnitude; out of band both sides are structurally zero. The
        # magnitude index draw consumes the stream identically for any
        # magnitudes array, so estimates with a common seed are comparable.
        band_values = np.ones(1) if model.magnitudes is None else \
            model.magnitudes[lowpass_band(model.shape, model.f_c)]
        in_band = gen.random(samples) < model.band_fraction
        mag = band_values[gen.integers(0, band_values.size, size=samples)]
        t1 = np.where(in_band, mag * e1, 0.0)
        t2 = np.where(in_band, mag * e2, 0.0)
    else:
        raise TypeError(f"unknown observation model {model!r}")

    contrib = sign_compare(t1, t2) * (e1 - e2)
    value = float(contrib.mean())
    stderr = float(contrib.std(ddof=1) / np.sqrt(samples))
    empirical = isinstance(model, PoissonNoise)
    return SnrEstimate(value, stderr, samples, empirical=empirical)
