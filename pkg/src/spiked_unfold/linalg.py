"""Dense and matrix-free linear algebra kernels.

Everything here works on the row side of a (possibly very wide) n x m
matrix: power iteration drives M M^T through matrix-vector products, the
dense spectrum comes from the n x n Gram matrix, and the shifted solves
used by the resolvent quantities factor (x^2 - M M^T) once per shift.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg


class NonConvergenceError(RuntimeError):
    """Power iteration ran out of iterations (or hit a zero operator).

    Carries the last iterate so callers can inspect how close it got.
    """

    def __init__(self, message, value=None, left=None, right=None,
                 rel_change=None, iterations=0):
        super().__init__(message)
        self.value = value
        self.left = left
        self.right = right
        self.rel_change = rel_change
        self.iterations = iterations


class ShiftInsideSpectrumError(ValueError):
    """The shift x of a resolvent solve is not above the top singular value."""


@dataclass(frozen=True)
class MatrixFreeOperator:
    """An n x m matrix given only through its action on vectors.

    ``apply`` maps length-m vectors to length-n vectors, ``apply_t`` is the
    adjoint.  ``apply_gram`` optionally provides a fused action of M M^T on
    length-n vectors; when present, power iteration uses it instead of
    composing ``apply(apply_t(.))`` (same operator, fewer passes over the
    data when the n x n Gram matrix has been materialized).
    """

    rows: int
    cols: int
    apply: Callable[[np.ndarray], np.ndarray]
    apply_t: Callable[[np.ndarray], np.ndarray]
    apply_gram: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("operator dimensions must be positive")

    @classmethod
    def from_dense(cls, M: np.ndarray) -> "MatrixFreeOperator":
        M = np.asarray(M, dtype=float)
        if M.ndim != 2:
            raise ValueError("expected a 2-d array")
        return cls(rows=M.shape[0], cols=M.shape[1],
                   apply=lambda x: M @ x, apply_t=lambda y: M.T @ y)


@dataclass(frozen=True)
class SingularTriple:
    """Top singular value with unit left/right singular vectors."""

    value: float
    left: np.ndarray
    right: np.ndarray
    iterations: int = 0
    rel_change: float = 0.0


@dataclass(frozen=True)
class SpectralSummary:
    """Top singular triple plus optional second value and full spectrum."""

    top: SingularTriple
    second_value: float | None = None
    full_spectrum: np.ndarray | None = None


def _fix_sign(x: np.ndarray) -> np.ndarray:
    # reporting convention: the first component of largest magnitude is positive
    i = int(np.argmax(np.abs(x)))
    return -x if x[i] < 0 else x


def top_singular_triple(op: MatrixFreeOperator, seed: int = 0,
                        tol: float = 1e-10, max_iter: int = 20000) -> SingularTriple:
    """Top singular triple of ``op`` by power iteration on M M^T.

    Iterates x <- M(M^T x) on the row side (never materializing M M^T
    unless the operator provides a fused Gram action) and stops when the
    relative change of the Rayleigh estimate sqrt(<x, M M^T x>) between
    successive iterations drops below ``tol``.  The right vector is derived
    at the end as M^T v / ||M^T v||.  Deterministic given ``seed``.

    Raises
    ------
    NonConvergenceError
        after ``max_iter`` iterations without convergence, or on a zero
        operator; the exception carries the last iterate and the achieved
        relative change.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    pair = op.apply_gram
    if pair is None:
        pair = lambda w: op.apply(op.apply_t(w))

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.rows)
    x /= np.linalg.norm(x)

    s_prev = None
    rel = np.inf
    for it in range(1, max_iter + 1):
        y = pair(x)
        ray = float(x @ y)
        if not np.isfinite(ray):
            raise NonConvergenceError("non-finite Rayleigh quotient",
                                      iterations=it)
        if ray <= 0.0:
            raise NonConvergenceError("zero operator: Rayleigh quotient vanished",
                                      value=0.0, left=x, iterations=it)
        s = np.sqrt(ray)
        x = y / np.linalg.norm(y)
        if s_prev is not None:
            rel = abs(s - s_prev) / s
            if rel < tol:
                left = _fix_sign(x)
                w = op.apply_t(left)
                nw = np.linalg.norm(w)
                if nw == 0.0:
                    raise NonConvergenceError("zero operator: M^T v vanished",
                                              value=s, left=left, iterations=it)
                return SingularTriple(value=float(nw), left=left, right=w / nw,
                                      iterations=it, rel_change=rel)
        s_prev = s

    raise NonConvergenceError(
        f"power iteration did not converge in {max_iter} iterations "
        "(near-degenerate top eigenvalue?)",
        value=s_prev, left=_fix_sign(x), rel_change=rel, iterations=max_iter)


def gram(M: np.ndarray) -> np.ndarray:
    """M M^T, symmetrized by averaging to kill round-off asymmetry."""
    M = np.asarray(M, dtype=float)
    G = M @ M.T
    return (G + G.T) / 2.0


_DENSE_GUARD = 5000


def full_singular_values(M: np.ndarray) -> np.ndarray:
    """All singular values of ``M``, descending.

    Computed as square roots of the eigenvalues of the Gram matrix on the
    shorter side (the wider orientation is transposed internally, which
    leaves the nonzero spectrum untouched).  Eigenvalues in [-1e-10, 0)
    are round-off on a PSD matrix and are zeroed before the square root.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("expected a 2-d array")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    if M.shape[0] > M.shape[1]:
        M = M.T
    n = M.shape[0]
    if n > _DENSE_GUARD:
        raise ValueError(f"dense solve guard exceeded: {n} > {_DENSE_GUARD}")
    w = np.linalg.eigvalsh(gram(M))
    if w[0] < -1e-10:
        raise ValueError(f"Gram matrix has eigenvalue {w[0]} below -1e-10")
    w = np.maximum(w, 0.0)
    return np.sqrt(w)[::-1]


def shifted_gram_solve(M: np.ndarray, x: float, b: np.ndarray) -> np.ndarray:
    """Solve (x - M M^T / x) w = b for a shift x above the spectrum.

    Forms the n x n Gram matrix once and runs a Cholesky solve on
    (x^2 - M M^T); positive definiteness of that matrix is exactly the
    condition x > s1(M), so a failed factorization signals a shift inside
    the spectrum.
    """
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float)
    if x <= 0:
        raise ShiftInsideSpectrumError("shift inside spectrum: x must be positive")
    S = x * x * np.eye(M.shape[0]) - gram(M)
    try:
        c, low = scipy.linalg.cho_factor(S, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise ShiftInsideSpectrumError("shift inside spectrum") from exc
    return x * scipy.linalg.cho_solve((c, low), b)


def dense_spectral_summary(M: np.ndarray, want_spectrum: bool = False) -> SpectralSummary:
    """Top singular triple of ``M`` through one dense n x n eigensolve.

    Used where every trial needs exact left and right top vectors and the
    row count is small (Monte Carlo sweeps, oracle cross-checks).
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if n > _DENSE_GUARD:
        raise ValueError(f"dense solve guard exceeded: {n} > {_DENSE_GUARD}")
    w, Q = np.linalg.eigh(gram(M))
    left = _fix_sign(Q[:, -1])
    wt = M.T @ left
    s = float(np.linalg.norm(wt))
    if s == 0.0:
        raise ValueError("zero matrix has no top singular triple")
    top = SingularTriple(value=s, left=left, right=wt / s)
    second = float(np.sqrt(max(w[-2], 0.0))) if n >= 2 else None
    spectrum = np.sqrt(np.maximum(w, 0.0))[::-1] if want_spectrum else None
    return SpectralSummary(top=top, second_value=second, full_spectrum=spectrum)


def deflated_second_value(op: MatrixFreeOperator, top: SingularTriple,
                          seed: int = 0, tol: float = 1e-10,
                          max_iter: int = 20000) -> float:
    """Second singular value via one rank-one deflation of the top triple."""
    s, v, u = top.value, top.left, top.right
    defl = MatrixFreeOperator(
        rows=op.rows, cols=op.cols,
        apply=lambda x: op.apply(x) - s * v * (u @ x),
        apply_t=lambda y: op.apply_t(y) - s * u * (v @ y))
    return top_singular_triple(defl, seed=seed, tol=tol, max_iter=max_iter).value
