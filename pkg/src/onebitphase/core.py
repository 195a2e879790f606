"""Unitary discrete Fourier transforms and seeded random sampling."""

from __future__ import annotations

import numpy as np

__all__ = [
    "RandomSource",
    "dft",
    "idft",
    "unitary_fftn",
    "unitary_ifftn",
    "sample_complex_gaussian",
    "sample_bernoulli_mask",
    "normalize",
    "require_unit",
    "require_signal",
]


def dft(u: np.ndarray) -> np.ndarray:
    """Unitary DFT along the last axis (forward scaling 1/sqrt(n)).

    Norm-preserving: ||dft(u)|| == ||u|| up to rounding, and idft inverts it.
    """
    return np.fft.fft(u, norm="ortho", axis=-1)


def idft(u: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dft` (the adjoint, since the transform is unitary)."""
    return np.fft.ifft(u, norm="ortho", axis=-1)


def unitary_fftn(a: np.ndarray, signal_ndim: int) -> np.ndarray:
    """Unitary FFT over the trailing `signal_ndim` axes.

    Leading axes are treated as a batch. With signal_ndim=1 this is dft(),
    with signal_ndim=2 the unitary 2D transform used for images.
    """
    axes = tuple(range(a.ndim - signal_ndim, a.ndim))
    return np.fft.fftn(a, axes=axes, norm="ortho")


def unitary_ifftn(a: np.ndarray, signal_ndim: int) -> np.ndarray:
    """Inverse of :func:`unitary_fftn` over the trailing `signal_ndim` axes."""
    axes = tuple(range(a.ndim - signal_ndim, a.ndim))
    return np.fft.ifftn(a, axes=axes, norm="ortho")


class RandomSource:
    """Deterministic random stream identified by (seed, derivation key).

    Identical (seed, key) pairs produce identical sample streams across runs.
    ``derive(*ids)`` appends indices to the key and returns an independent
    child stream, so parallel trials stay reproducible without sharing state.
    """

    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        key = tuple(int(k) for k in key)
        for k in key:
            if not 0 <= k < 2**32:
                raise ValueError(f"derivation indices must be in [0, 2^32), got {k}")
        self.seed = seed
        self.key = key
        ss = np.random.SeedSequence(seed, spawn_key=key)
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def derive(self, *ids: int) -> "RandomSource":
        """Child stream at key + ids; independent of the parent and siblings."""
        return RandomSource(self.seed, self.key + ids)

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, key={self.key})"


def sample_complex_gaussian(shape, rng: RandomSource) -> np.ndarray:
    """Standard circular complex Gaussian: Re and Im parts N(0, 1/2) each.

    `shape` may be an int (vector length) or a tuple; E|w_j|^2 = 1 entrywise.
    """
    if isinstance(shape, (int, np.integer)):
        shape = (int(shape),)
    if int(np.prod(shape)) < 2:
        raise ValueError("need at least 2 entries")
    z = rng.generator.standard_normal((2,) + tuple(shape))
    return (z[0] + 1j * z[1]) / np.sqrt(2.0)


def sample_bernoulli_mask(shape, p: float, rng: RandomSource) -> np.ndarray:
    """0/1 mask with P(entry = 1) = p, embedded as a complex array."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly in (0, 1), got {p}")
    if isinstance(shape, (int, np.integer)):
        shape = (int(shape),)
    return (rng.generator.random(tuple(shape)) < p).astype(np.complex128)


def normalize(u: np.ndarray) -> np.ndarray:
    """u / ||u||_2; rejects the zero vector."""
    nrm = np.linalg.norm(u.ravel())
    if nrm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return u / nrm


def require_unit(u: np.ndarray, tol: float = 1e-6, name: str = "signal") -> None:
    """Raise unless ||u||_2 is within tol of 1."""
    nrm = np.linalg.norm(u.ravel())
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"{name} must be unit-norm (||.|| = {nrm:.6g})")


def require_signal(u: np.ndarray, name: str = "signal") -> None:
    """Validate the signal shape contract: every axis even and of length >= 2."""
    if u.ndim < 1 or u.size < 2:
        raise ValueError(f"{name} must have at least 2 entries")
    for d in u.shape:
        if d < 2 or d % 2 != 0:
            raise ValueError(f"{name} dimensions must be even and >= 2, got shape {u.shape}")
