"""Phase-transition predictions for rank-one perturbations of long matrices.

A unit-rank signal beta * v u^T added to an n x m noise matrix (entry
variance 1/n, ratio phi = sqrt(m/n)) detaches an outlier singular value
exactly when the normalized signal strength lambda = beta/sqrt(phi)
exceeds 1.  This module provides the closed-form predictions (outlier
location and singular-vector overlaps), the inversion estimator that
recovers beta from an observed top singular value, and a per-sample
root-finding oracle that locates the outlier of a concrete matrix from
its resolvent, independently of any eigensolver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import ShiftInsideSpectrumError, gram

__all__ = [
    "BbpPrediction", "ResolventTriple", "BracketExhaustedError",
    "critical_snr", "predict", "beta_hat", "empirical_resolvent",
    "master_equation_root",
]


class BracketExhaustedError(RuntimeError):
    """The master-equation root lies beyond the largest bracket tried."""


@dataclass(frozen=True)
class BbpPrediction:
    """Closed-form predictions at normalized signal strength ``lam``.

    Below the transition (lam <= 1) the outlier collapses to the bulk edge
    phi + 1 and both overlaps are 0.
    """

    lam: float
    phi: float
    above_threshold: bool
    outlier: float
    left_overlap: float
    right_overlap: float


@dataclass(frozen=True)
class ResolventTriple:
    """Signal-direction resolvent quantities of a sample at shift ``x``.

    ``left_form``  — <v, (x - Z Z^T/x)^{-1} v>
    ``cross_form`` — <v, (x - Z Z^T/x)^{-1} (Z/x) u>
    ``right_form`` — <u, (x - Z^T Z/x)^{-1} u>
    """

    left_form: float
    cross_form: float
    right_form: float
    x: float


def critical_snr(phi: float) -> float:
    """Signal strength beta above which an outlier appears: sqrt(phi)."""
    if not np.isfinite(phi) or phi < 1.0:
        raise ValueError("phi must be finite and >= 1")
    return math.sqrt(phi)


def predict(lam: float, phi: float) -> BbpPrediction:
    """Outlier location and overlaps for signal strength lam * sqrt(phi)."""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    if phi < 1.0:
        raise ValueError("phi must be >= 1")
    if lam <= 1.0:
        return BbpPrediction(lam=lam, phi=phi, above_threshold=False,
                             outlier=phi + 1.0, left_overlap=0.0,
                             right_overlap=0.0)
    l2 = lam * lam
    l4 = l2 * l2
    outlier = math.sqrt(phi * phi + (l2 + 1.0 / l2) * phi + 1.0)
    left = math.sqrt((l4 - 1.0) / (l4 + l2 / phi))
    right = math.sqrt((l4 - 1.0) / (l2 * (l2 + phi)))
    return BbpPrediction(lam=lam, phi=phi, above_threshold=True,
                         outlier=outlier, left_overlap=left,
                         right_overlap=right)


def beta_hat(s1_hat: float, phi: float) -> tuple[float, bool]:
    """Invert an observed top singular value back to a signal strength.

    Solves s1^2 = phi^2 + b^2 + phi^2/b^2 + 1 for b, taking the root that
    grows with s1.  Only meaningful when s1 sits beyond the bulk edge
    phi + 1; below it the discriminant is clamped to zero and the returned
    flag marks the estimate as sub-threshold.
    """
    if s1_hat < 0:
        raise ValueError("s1_hat must be >= 0")
    s2 = s1_hat * s1_hat
    if s1_hat > phi + 1.0:
        disc = (s2 - (phi + 1.0) ** 2) * (s2 - (phi - 1.0) ** 2)
        return math.sqrt(((s2 - (phi * phi + 1.0)) + math.sqrt(disc)) / 2.0), False
    return math.sqrt(max(0.0, s2 - phi * phi - 1.0) / 2.0), True


class _ResolventEvaluator:
    """Evaluates the resolvent forms of one sample at many shifts.

    Factors (x^2 - Z Z^T) per shift on the n x n side only; the m x m
    quantity is reduced through
    <u, (x - Z^T Z/x)^{-1} u> = (<u,u> + <Zu, (x^2 - Z Z^T)^{-1} Zu>)/x.
    """

    def __init__(self, Z: np.ndarray, v: np.ndarray, u: np.ndarray):
        self.v = np.asarray(v, dtype=float)
        self.u = np.asarray(u, dtype=float)
        self.G = gram(Z)
        self.Zu = Z @ self.u
        self.uu = float(self.u @ self.u)
        self.eye = np.eye(Z.shape[0])

    def top_noise_singular(self) -> float:
        return math.sqrt(max(float(np.linalg.eigvalsh(self.G)[-1]), 0.0))

    def triple(self, x: float) -> ResolventTriple:
        S = x * x * self.eye - self.G
        try:
            c = np.linalg.cholesky(S)
        except np.linalg.LinAlgError as exc:
            raise ShiftInsideSpectrumError("shift inside spectrum") from exc
        wv = np.linalg.solve(c.T, np.linalg.solve(c, self.v))
        wzu = np.linalg.solve(c.T, np.linalg.solve(c, self.Zu))
        left = x * float(self.v @ wv)
        cross = float(self.v @ wzu)
        right = (self.uu + float(self.Zu @ wzu)) / x
        return ResolventTriple(left_form=left, cross_form=cross,
                               right_form=right, x=x)


def empirical_resolvent(Z: np.ndarray, v: np.ndarray, u: np.ndarray,
                        x: float) -> ResolventTriple:
    """Resolvent forms of the sample (Z, v, u) at a shift x > s1(Z)."""
    Z = np.asarray(Z, dtype=float)
    return _ResolventEvaluator(Z, v, u).triple(x)


def _master_gap(beta: float, t: ResolventTriple) -> float:
    return (1.0 / beta - t.cross_form) ** 2 - t.left_form * t.right_form


def master_equation_root(Z: np.ndarray, v: np.ndarray, u: np.ndarray,
                         beta: float) -> float | None:
    """Locate the outlier of beta*v u^T + Z by root finding on its resolvent.

    Solves (1/beta - cross(x))^2 = left(x) * right(x) above the noise
    spectrum.  The scan starts a bulk-edge margin of 3 n^{-2/3} above
    s1(Z): immediately above s1 the equation also picks up the
    interlacing singular value that hugs the bulk, which is not an
    outlier.  Returns None when no sign change exists (no outlier); the
    root, when present, equals the top singular value of the perturbed
    matrix.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    Z = np.asarray(Z, dtype=float)
    n, m = Z.shape
    phi = math.sqrt(m / n)
    ev = _ResolventEvaluator(Z, v, u)
    s1 = ev.top_noise_singular()

    lower = s1 + max(1e-6 * (phi + 1.0), 3.0 * n ** (-2.0 / 3.0))
    upper = max(2.0 * beta, 2.0 * (phi + 1.0))
    for _ in range(9):
        xs = np.geomspace(lower, upper, 64)
        fs = np.array([_master_gap(beta, ev.triple(x)) for x in xs])
        if not np.all(np.isfinite(fs)):
            raise ArithmeticError("non-finite master-equation values")
        # rightmost adjacent sign change; robust against near-pole wiggles
        change = None
        for i in range(len(xs) - 2, -1, -1):
            if fs[i] == 0.0:
                return float(xs[i])
            if fs[i] * fs[i + 1] < 0.0:
                change = i
                break
        if change is not None:
            a, b = float(xs[change]), float(xs[change + 1])
            fa = fs[change]
            while b - a > 1e-10:
                mid = 0.5 * (a + b)
                fm = _master_gap(beta, ev.triple(mid))
                if fm == 0.0:
                    return mid
                if (fa < 0.0) == (fm < 0.0):
                    a, fa = mid, fm
                else:
                    b = mid
            return 0.5 * (a + b)
        if fs[-1] > 0.0:
            return None
        upper *= 2.0  # f still negative at the far end: enlarge and retry
    raise BracketExhaustedError("bracket exhausted: enlarge x_max")
