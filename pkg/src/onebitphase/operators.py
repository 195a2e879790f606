"""Implicit Hermitian operators applied through the FFT, plus dense oracles.

The one-bit operator averages Diag(conj w1) F* Diag(y) F Diag(w1) minus the
same expression with w2 over the r mask pairs. Its quadratic form is exactly
the empirical one-bit risk (1/r) sum_i <y_i, |F(w1_i*x)|^2 - |F(w2_i*x)|^2>,
so its leading eigenvector estimates the signal (not its conjugate; the
reversed sandwich Diag(w) F Diag(y) F* Diag(conj w) has the conjugate signal
as its expected top eigenvector and agrees only for real signals).

The sub-exponential variant replaces the sign pattern with raw intensities,
sums over all 2r patterns, and carries an extra factor n so its expectation
is x0 x0* + I under the unitary transform convention.

Neither matrix is materialized in production; the dense assemblies here are
size-guarded testing oracles built from the explicit transform matrix.
"""

from __future__ import annotations

import functools

import numpy as np

from .core import require_unit, unitary_fftn, unitary_ifftn
from .measurement import MeasurementSet

__all__ = [
    "OneBitOperator",
    "SubExpOperator",
    "DenseOperator",
    "dense_onebit",
    "dense_subexp",
    "empirical_risk",
    "transform_matrix",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 256  # dense assembly is a testing oracle, not a production path


class OneBitOperator:
    """Matrix-free view of the sign-pattern operator of a measurement set.

    apply() costs O(r n log n): two transforms per mask branch, vectorized
    over the r pairs. The operator is linear and Hermitian by construction
    (each summand is M* Diag(y) M with real y). Zeros in the sign pattern
    (the structurally dead band of low-pass data) simply annihilate those
    frequencies.
    """

    def __init__(self, ms: MeasurementSet):
        self.ms = ms
        self.shape = ms.shape
        self.n = ms.n

    def apply(self, u: np.ndarray) -> np.ndarray:
        if u.shape != self.shape:
            raise ValueError(f"expected shape {self.shape}, got {u.shape}")
        ms, nd = self.ms, len(self.shape)
        y = ms.signs
        t1 = ms.masks1.conj() * unitary_ifftn(y * unitary_fftn(ms.masks1 * u, nd), nd)
        t2 = ms.masks2.conj() * unitary_ifftn(y * unitary_fftn(ms.masks2 * u, nd), nd)
        return (t1 - t2).mean(axis=0)


class SubExpOperator:
    """Matrix-free operator built from raw intensities: (n/L) times the sum
    over all L = 2r patterns of Diag(conj w) F* Diag(b) F Diag(w). Its
    expectation is x0 x0* + I, so the leading eigenvector is again the signal
    direction, with eigenvalue near 2 against a unit bulk.
    """

    def __init__(self, ms: MeasurementSet):
        if not ms.has_intensities:
            raise ValueError("SubExpOperator needs a measurement set with raw intensities")
        self.ms = ms
        self.shape = ms.shape
        self.n = ms.n
        self.L = 2 * ms.r

    def apply(self, u: np.ndarray) -> np.ndarray:
        if u.shape != self.shape:
            raise ValueError(f"expected shape {self.shape}, got {u.shape}")
        ms, nd = self.ms, len(self.shape)
        t1 = ms.masks1.conj() * unitary_ifftn(ms.intensities1 * unitary_fftn(ms.masks1 * u, nd), nd)
        t2 = ms.masks2.conj() * unitary_ifftn(ms.intensities2 * unitary_fftn(ms.masks2 * u, nd), nd)
        return (t1.sum(axis=0) + t2.sum(axis=0)) * (self.n / self.L)


class DenseOperator:
    """Explicit Hermitian matrix wrapped in the operator interface (tests)."""

    def __init__(self, matrix: np.ndarray, shape: tuple | None = None):
        matrix = np.asarray(matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("matrix must be square")
        self.matrix = matrix
        self.shape = tuple(shape) if shape is not None else (matrix.shape[0],)
        self.n = matrix.shape[0]
        if int(np.prod(self.shape)) != self.n:
            raise ValueError("shape does not match matrix size")

    def apply(self, u: np.ndarray) -> np.ndarray:
        if u.shape != self.shape:
            raise ValueError(f"expected shape {self.shape}, got {u.shape}")
        return (self.matrix @ u.ravel()).reshape(self.shape)


def transform_matrix(shape) -> np.ndarray:
    """Explicit unitary DFT matrix for a (possibly multi-axis) signal shape,
    built from the defining formula, independently of any FFT routine.

    Multi-axis transforms are Kronecker products of the per-axis matrices in
    row-major (C) flattening order.
    """
    if isinstance(shape, (int, np.integer)):
        shape = (int(shape),)
    mats = []
    for d in shape:
        j = np.arange(d)
        mats.append(np.exp(-2j * np.pi * np.outer(j, j) / d) / np.sqrt(d))
    return functools.reduce(np.kron, mats)


def _guard_dense(n: int):
    if n > DENSE_LIMIT:
        raise ValueError(f"dense assembly limited to n <= {DENSE_LIMIT}, got {n}")


def _sandwich(F: np.ndarray, w: np.ndarray, diag: np.ndarray) -> np.ndarray:
    """Diag(conj w) F* Diag(diag) F Diag(w) for flat vectors w, diag."""
    middle = F.conj().T @ (diag[:, None] * F)
    return w.conj()[:, None] * middle * w[None, :]


def dense_onebit(op: OneBitOperator) -> np.ndarray:
    """Explicit n x n assembly of the one-bit operator (testing oracle)."""
    ms = op.ms
    _guard_dense(ms.n)
    F = transform_matrix(ms.shape)
    acc = np.zeros((ms.n, ms.n), dtype=np.complex128)
    for i in range(ms.r):
        y = ms.signs[i].ravel().astype(np.float64)
        acc += _sandwich(F, ms.masks1[i].ravel(), y)
        acc -= _sandwich(F, ms.masks2[i].ravel(), y)
    return acc / ms.r


def dense_subexp(op: SubExpOperator) -> np.ndarray:
    """Explicit assembly of the sub-exponential operator (testing oracle)."""
    ms = op.ms
    _guard_dense(ms.n)
    F = transform_matrix(ms.shape)
    acc = np.zeros((ms.n, ms.n), dtype=np.complex128)
    for i in range(ms.r):
        acc += _sandwich(F, ms.masks1[i].ravel(), ms.intensities1[i].ravel())
        acc += _sandwich(F, ms.masks2[i].ravel(), ms.intensities2[i].ravel())
    return acc * (ms.n / (2 * ms.r))


def empirical_risk(op, x: np.ndarray) -> float:
    """Quadratic form x* (op x) for a unit-norm x; the imaginary part is a
    rounding residual and is dropped."""
    require_unit(x, name="x")
    value = np.vdot(x.ravel(), op.apply(x).ravel())
    return float(value.real)
