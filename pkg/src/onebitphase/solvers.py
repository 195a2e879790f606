"""Spectral recovery by power iteration and alternating-minimization refinement."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import RandomSource, normalize, require_unit, sample_complex_gaussian, \
    unitary_fftn, unitary_ifftn
from .measurement import LowPass, MeasurementSet

__all__ = [
    "PowerConfig",
    "AMConfig",
    "RecoveryResult",
    "DegenerateOperatorError",
    "SingularStepError",
    "power_method",
    "phase_of",
    "alt_min",
    "alt_min_iterates",
    "err",
]

log = logging.getLogger(__name__)


class DegenerateOperatorError(RuntimeError):
    """The operator maps the iterate to (numerically) nothing; no dominant
    eigenvector can be extracted (e.g. an all-zero sign pattern)."""


class SingularStepError(RuntimeError):
    """The diagonal least-squares step divides by zero at some signal indices
    (every mask vanishes there)."""

    def __init__(self, dead_indices):
        self.dead_indices = list(dead_indices)
        super().__init__(f"masks vanish at indices {self.dead_indices}; "
                         "the least-squares step is singular")


@dataclass
class PowerConfig:
    """tol is on the phase-aligned iterate difference min_phi ||x_j - e^{i phi} x_{j-1}||."""

    tol: float = 1e-8
    max_iter: int = 10_000

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class AMConfig:
    t0: int = 50

    def __post_init__(self):
        if self.t0 < 1:
            raise ValueError("t0 must be >= 1")


@dataclass
class RecoveryResult:
    """x_hat is unit-norm; lambda_hat is the final iterate norm under the
    operator (NaN for alternating minimization, which estimates no
    eigenvalue); residual_history holds one entry per iteration."""

    x_hat: np.ndarray
    lambda_hat: float
    iterations: int
    converged: bool
    residual_history: list = field(default_factory=list)


def power_method(op, cfg: PowerConfig | None = None,
                 rng: RandomSource | None = None,
                 x_init: np.ndarray | None = None) -> RecoveryResult:
    """Dominant-eigenvector estimate of a Hermitian operator.

    Parameters
    ----------
    op : object with .apply(u) and .shape (one-bit, sub-exponential, or dense)
    cfg : PowerConfig, tolerance and iteration cap
    rng : source for the random unit start (ignored when x_init is given)
    x_init : optional start vector, normalized internally

    The stopping test aligns the global phase before differencing, so a
    negative dominant eigenvalue (sign-flipping iterates) still converges;
    lambda_hat is then |eigenvalue| and a warning records the sign.
    """
    cfg = cfg or PowerConfig()
    if x_init is not None:
        x = normalize(np.asarray(x_init, dtype=np.complex128))
    else:
        if rng is None:
            raise ValueError("power_method needs rng or x_init")
        x = normalize(sample_complex_gaussian(op.shape, rng))

    lam = 0.0
    converged = False
    history: list[float] = []
    iterations = 0
    for _ in range(cfg.max_iter):
        u = op.apply(x)
        lam = float(np.linalg.norm(u.ravel()))
        if lam == 0.0 or not math.isfinite(lam):
            raise DegenerateOperatorError(f"operator produced a vector of norm {lam}")
        x_new = u / lam
        overlap = abs(np.vdot(x_new.ravel(), x.ravel()))
        diff = math.sqrt(max(0.0, 2.0 - 2.0 * overlap))
        history.append(diff)
        x = x_new
        iterations += 1
        if diff <= cfg.tol:
            converged = True
            break

    rayleigh = float(np.vdot(x.ravel(), op.apply(x).ravel()).real)
    if rayleigh < 0:
        log.warning("dominant eigenvalue is negative (Rayleigh quotient %.3g, "
                    "lambda_hat %.3g)", rayleigh, lam)
    return RecoveryResult(x_hat=x, lambda_hat=lam, iterations=iterations,
                          converged=converged, residual_history=history)


def phase_of(z: np.ndarray) -> np.ndarray:
    """Entrywise z / |z|; zero entries map to 1 by convention."""
    z = np.asarray(z, dtype=np.complex128)
    mag = np.abs(z)
    out = np.ones_like(z)
    nz = mag > 0
    out[nz] = z[nz] / mag[nz]
    return out


def _am_setup(ms: MeasurementSet):
    """Flatten the pairs into 2r patterns and precompute the fixed pieces."""
    if not ms.has_intensities:
        raise ValueError("alternating minimization needs raw intensities "
                         "(build the measurement set with keep_intensities=True)")
    if isinstance(ms.model, LowPass):
        raise ValueError("alternating minimization needs full-band intensities; "
                         "low-pass data has a structurally dead band")
    W = np.concatenate([ms.masks1, ms.masks2], axis=0)
    B = np.concatenate([ms.intensities1, ms.intensities2], axis=0)
    sqrtB = np.sqrt(B)
    denom = (np.abs(W) ** 2).sum(axis=0)
    dead = np.flatnonzero(denom.ravel() == 0.0)
    if dead.size:
        raise SingularStepError(dead.tolist())
    return W, sqrtB, denom


def alt_min_iterates(ms: MeasurementSet, x_init: np.ndarray, t0: int):
    """Yield (x_t, residual_t) for t = 1..t0.

    Each iteration assigns the phases u = Ph(F(w * x)) for every pattern and
    then solves the least-squares problem for x exactly (the normal matrix is
    diagonal because the transform is unitary). The residual
    sum_s ||sqrt(b_s) * u_s - F(w_s * x)||^2 is evaluated after the x update,
    which makes the yielded sequence non-increasing.
    """
    W, sqrtB, denom = _am_setup(ms)
    nd = len(ms.shape)
    x = np.asarray(x_init, dtype=np.complex128)
    if x.shape != ms.shape:
        raise ValueError(f"x_init shape {x.shape} != signal shape {ms.shape}")
    for _ in range(t0):
        u = phase_of(unitary_fftn(W * x, nd))
        x = (W.conj() * unitary_ifftn(sqrtB * u, nd)).sum(axis=0) / denom
        resid = float(np.sum(np.abs(sqrtB * u - unitary_fftn(W * x, nd)) ** 2))
        yield x, resid


def alt_min(ms: MeasurementSet, x_init: np.ndarray,
            cfg: AMConfig | None = None) -> RecoveryResult:
    """Run t0 alternating-minimization iterations from x_init on the raw
    intensities; returns the final iterate normalized to unit norm."""
    cfg = cfg or AMConfig()
    require_unit(np.asarray(x_init), name="x_init")
    x = np.asarray(x_init, dtype=np.complex128)
    history = []
    for x, resid in alt_min_iterates(ms, x_init, cfg.t0):
        history.append(resid)
    return RecoveryResult(x_hat=normalize(x), lambda_hat=float("nan"),
                          iterations=cfg.t0, converged=True,
                          residual_history=history)


def err(x: np.ndarray, x0: np.ndarray) -> float:
    """Phase-invariant recovery error 1 - |<x, x0>|^2 for unit-norm inputs.

    Equals half the squared Frobenius distance between the rank-one
    projectors xx* and x0x0*, and is unchanged by a global phase on either
    argument.
    """
    require_unit(x, name="x")
    require_unit(x0, name="x0")
    value = 1.0 - abs(np.vdot(x.ravel(), x0.ravel())) ** 2
    return float(min(1.0, max(0.0, value)))
