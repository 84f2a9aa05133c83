"""Spiked tensors, axis unfoldings, and the per-axis recovery estimator.

An order-k tensor with a planted rank-one signal unfolds along any axis
set I into an n^q x n^{k-q} matrix; after dividing by n^{(q-1)/2} that
matrix is a rank-one perturbation of noise with entry variance 1/n^q.
Index conventions follow the colexicographic vectorization: the first
listed axis varies fastest, so row index a = 1 + sum_j (i_{k_j}-1) n^{j-1}
and likewise for columns over the complementary axes in increasing order.
Axis arguments in this module are 0-based like numpy; reported axis labels
on estimates are 1-based.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .bbp import beta_hat
from .linalg import MatrixFreeOperator, NonConvergenceError, top_singular_triple

DEFAULT_MEM_CAP = 200_000_000
MEM_CAP_ENV = "SPIKED_UNFOLD_MEM_CAP"

NOISE_KINDS = ("gaussian", "rademacher", "zero")


class AxisConvergenceError(RuntimeError):
    """Power iteration failed on one or more axes; carries the rest."""

    def __init__(self, failures, estimates):
        axes = ", ".join(str(a) for a, _ in failures)
        super().__init__(f"power iteration did not converge on axis {axes}")
        self.failures = tuple(failures)
        self.estimates = tuple(estimates)


@dataclass(frozen=True)
class SpikedTensorModel:
    """Rank-one signal of strength ``beta`` plus i.i.d. noise of variance 1/n.

    ``signals`` holds one unit vector per axis; ``noise_kind`` is
    "gaussian", "rademacher", or "zero" (the latter is a test hook for
    noiseless tensors).
    """

    order: int
    dim: int
    beta: float
    signals: tuple
    noise_seed: int = 0
    noise_kind: str = "gaussian"

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("order must be >= 2")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if len(self.signals) != self.order:
            raise ValueError("need one signal vector per axis")
        sigs = tuple(np.asarray(v, dtype=float) for v in self.signals)
        for v in sigs:
            if v.shape != (self.dim,):
                raise ValueError("signal vectors must have length dim")
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ValueError("signal vectors must be unit norm")
        object.__setattr__(self, "signals", sigs)
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {NOISE_KINDS}")


@dataclass(frozen=True)
class AxisEstimate:
    """Recovery output for one axis: 1-based ``axis`` label, the top
    singular value of that axis unfolding, the inverted signal-strength
    estimate (flagged when the observation sits inside the bulk), and the
    unit estimate of the axis signal vector."""

    axis: int
    s1_hat: float
    beta_hat: float
    below_threshold: bool
    v_hat: np.ndarray


def memory_cap() -> int:
    """Entry-count cap for sampled tensors; env override SPIKED_UNFOLD_MEM_CAP."""
    raw = os.environ.get(MEM_CAP_ENV)
    if raw is None:
        return DEFAULT_MEM_CAP
    return int(raw)


def unfolding_ratio(n: int, k: int, q: int = 1) -> float:
    """Aspect ratio sqrt(cols/rows) = n^{(k-2q)/2} of a q-axis unfolding."""
    if not 1 <= q <= k - 1:
        raise ValueError("q must satisfy 1 <= q <= k-1")
    return float(n) ** ((k - 2 * q) / 2.0)


def tensor_critical_beta(n: int, k: int) -> float:
    """Detection threshold n^{(k-2)/4}, independent of the unfolding choice."""
    return float(n) ** ((k - 2) / 4.0)


def sample_spiked_tensor(model: SpikedTensorModel, mem_cap: int | None = None) -> np.ndarray:
    """Realize beta * (signal outer product) + noise, deterministically.

    Gaussian noise entries are N(0, 1/n); rademacher entries are
    +-1/sqrt(n).  Refuses to allocate more than the memory cap.
    """
    cap = memory_cap() if mem_cap is None else mem_cap
    size = model.dim ** model.order
    if size > cap:
        raise ValueError(
            f"tensor of {size} entries exceeds the memory cap {cap} "
            f"(override with {MEM_CAP_ENV})")
    shape = (model.dim,) * model.order
    rng = np.random.default_rng(model.noise_seed)
    if model.noise_kind == "gaussian":
        X = rng.standard_normal(shape) / math.sqrt(model.dim)
    elif model.noise_kind == "rademacher":
        X = (2.0 * rng.integers(0, 2, size=shape) - 1.0) / math.sqrt(model.dim)
    else:
        X = np.zeros(shape)
    if model.beta != 0.0:
        S = model.signals[0]
        for v in model.signals[1:]:
            S = np.multiply.outer(S, v)
        X += model.beta * S
    return X


def _check_cube(X: np.ndarray) -> tuple[int, int]:
    if X.ndim < 2:
        raise ValueError("tensor order must be >= 2")
    n = X.shape[0]
    if any(d != n for d in X.shape):
        raise ValueError("all tensor axes must share one dimension")
    return X.ndim, n


def unfold(X: np.ndarray, axes) -> np.ndarray:
    """Matricize ``X`` along the 0-based axis set ``axes`` (strictly increasing).

    Rows run over the selected axes, columns over the complement, both with
    the first listed axis fastest.  A pure reshuffle: the entry multiset is
    preserved exactly.
    """
    X = np.asarray(X, dtype=float)
    k, n = _check_cube(X)
    axes = tuple(int(a) for a in axes)
    if not axes:
        raise ValueError("axes must be nonempty")
    if any(a < 0 or a >= k for a in axes):
        raise ValueError(f"axes must lie in 0..{k - 1}")
    if any(axes[i] >= axes[i + 1] for i in range(len(axes) - 1)):
        raise ValueError("axes must be strictly increasing")
    q = len(axes)
    if q >= k:
        raise ValueError("axes must leave at least one complementary axis")
    comp = [a for a in range(k) if a not in axes]
    A = X.transpose(list(axes) + comp)
    return A.reshape(n ** q, n ** (k - q), order="F")


def normalized_unfold(X: np.ndarray, axes) -> np.ndarray:
    """Unfold and divide by n^{(q-1)/2} so noise entries have variance 1/n^q."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    q = len(tuple(axes))
    return unfold(X, axes) / float(n) ** ((q - 1) / 2.0)


def vec_kron(vectors) -> np.ndarray:
    """Colexicographic vectorization of an outer product of vectors.

    The first listed vector's index varies fastest, so component
    b = 1 + sum_j (i_j - 1) n^{j-1} carries the product of the j-th
    entries.  Unit norm in, unit norm out.
    """
    vectors = [np.asarray(v, dtype=float) for v in vectors]
    if not vectors:
        raise ValueError("need at least one vector")
    acc = vectors[0]
    for v in vectors[1:]:
        acc = np.kron(v, acc)
    return acc


def _axis_gram(X: np.ndarray, axis: int) -> np.ndarray:
    k, n = X.ndim, X.shape[0]
    if axis == 0:
        V = X.reshape(n, -1)
        G = V @ V.T
    elif axis == k - 1:
        V = X.reshape(-1, n)
        G = V.T @ V
    else:
        lead = n ** axis
        V = X.reshape(lead, n, -1)
        G = np.zeros((n, n))
        step = max(1, (1 << 22) // (n * n))  # bound the batched temporary
        for s in range(0, lead, step):
            B = V[s:s + step]
            G += np.matmul(B, B.transpose(0, 2, 1)).sum(axis=0)
    return (G + G.T) / 2.0


def axis_unfold_operator(X: np.ndarray, axis: int,
                         materialize_gram: bool = False) -> MatrixFreeOperator:
    """The n x n^{k-1} single-axis unfolding as a matrix-free operator.

    Reads strided views of the tensor; no unfolded copy is made.  With
    ``materialize_gram`` the n x n Gram matrix is formed once so that
    power iteration costs O(n^2) per step after an O(n^{k+1}) setup,
    instead of O(n^k) per step.
    """
    X = np.asarray(X, dtype=float)
    k, n = _check_cube(X)
    axis = int(axis)
    if not 0 <= axis < k:
        raise ValueError(f"axis must lie in 0..{k - 1}")
    comp = [a for a in range(k) if a != axis]
    cols_shape = (n,) * (k - 1)
    subs = list(range(k))

    def apply(w):
        T = np.asarray(w, dtype=float).reshape(cols_shape, order="F")
        return np.einsum(X, subs, T, comp, [axis])

    def apply_t(y):
        out = np.einsum(X, subs, np.asarray(y, dtype=float), [axis], comp)
        return out.ravel(order="F")

    apply_gram = None
    if materialize_gram:
        G = _axis_gram(X, axis)
        apply_gram = lambda w: G @ w

    return MatrixFreeOperator(rows=n, cols=n ** (k - 1),
                              apply=apply, apply_t=apply_t,
                              apply_gram=apply_gram)


def unfolding_recovery(X: np.ndarray, seed: int = 0, tol: float = 1e-10,
                       max_iter: int = 20000,
                       materialize_gram: bool = True) -> list[AxisEstimate]:
    """Per-axis recovery of the signal strength and signal vectors.

    For each axis, takes the top singular triple of the single-axis
    unfolding by power iteration, keeps the left vector as the signal
    estimate, and inverts the top singular value to a signal-strength
    estimate through the aspect ratio phi = n^{(k-2)/2} of the unfolded
    matrix.  Deterministic given ``seed``.

    Raises AxisConvergenceError if any axis fails to converge; the
    exception carries the estimates of the axes that did.
    """
    X = np.asarray(X, dtype=float)
    k, n = _check_cube(X)
    phi = unfolding_ratio(n, k, q=1)
    estimates: list[AxisEstimate] = []
    failures = []
    for axis in range(k):
        op = axis_unfold_operator(X, axis, materialize_gram=materialize_gram)
        try:
            triple = top_singular_triple(op, seed=seed, tol=tol, max_iter=max_iter)
        except NonConvergenceError as exc:
            failures.append((axis + 1, exc))
            continue
        est, below = beta_hat(triple.value, phi)
        estimates.append(AxisEstimate(axis=axis + 1, s1_hat=triple.value,
                                      beta_hat=est, below_threshold=below,
                                      v_hat=triple.left))
    if failures:
        raise AxisConvergenceError(failures, estimates)
    return estimates
