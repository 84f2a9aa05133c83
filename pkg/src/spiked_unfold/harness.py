"""Seeded Monte Carlo sweeps across signal strengths, with aggregation.

Every trial derives its random stream purely from (base_seed, grid index,
trial index) through a SeedSequence spawn key, so sweeps are bitwise
reproducible regardless of execution order or worker count.  Records carry
the per-trial observations next to the theory predictions evaluated at the
same parameters; aggregation reduces them to means with standard errors.

Output formats: records and aggregates as CSV (17 significant digits),
configs as JSON mirroring SweepConfig field names.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .bbp import BbpPrediction, beta_hat, predict
from .linalg import NonConvergenceError, dense_spectral_summary, full_singular_values
from .mplaw import MpLaw, singular_density
from .tensors import (AxisConvergenceError, SpikedTensorModel, NOISE_KINDS,
                      sample_spiked_tensor, tensor_critical_beta,
                      unfolding_ratio, unfolding_recovery)

SIGNAL_KINDS = ("gaussian-unit", "basis", "given")

RECORD_COLUMNS = (
    "mode", "n", "m", "k", "q", "lambda", "trial", "seed",
    "s1_hat", "beta_hat", "overlap_left", "overlap_right", "axis",
    "pred_outlier", "pred_overlap_left", "pred_overlap_right", "status",
)

AGGREGATE_COLUMNS = (
    "mode", "n", "m", "k", "q", "lambda", "axis", "trials_ok", "trials_failed",
    "s1_hat_mean", "s1_hat_se", "beta_hat_mean", "beta_hat_se",
    "overlap_left_mean", "overlap_left_se",
    "overlap_right_mean", "overlap_right_se",
    "pred_outlier", "pred_overlap_left", "pred_overlap_right",
)


@dataclass(frozen=True)
class SweepConfig:
    """Parameters of one Monte Carlo sweep.

    ``m_or_k`` is the column count m in matrix mode and the tensor order k
    in tensor mode.  ``given_signals`` supplies explicit unit vectors when
    ``signal_kind`` is "given": (v, u) in matrix mode, one vector per axis
    in tensor mode.
    """

    mode: str
    n: int
    m_or_k: int
    lambda_grid: tuple
    trials: int
    base_seed: int
    noise_kind: str = "gaussian"
    signal_kind: str = "gaussian-unit"
    output_path: str | None = None
    given_signals: tuple | None = None

    def __post_init__(self):
        if self.mode not in ("matrix", "tensor"):
            raise ValueError("mode must be 'matrix' or 'tensor'")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.mode == "matrix" and self.m_or_k < self.n:
            raise ValueError("matrix mode needs m >= n (phi >= 1)")
        if self.mode == "tensor" and not 2 <= self.m_or_k <= 16:
            raise ValueError("tensor order k must be in 2..16")
        grid = tuple(float(x) for x in self.lambda_grid)
        if not grid:
            raise ValueError("lambda_grid must be nonempty")
        if any(x < 0 for x in grid):
            raise ValueError("lambda_grid entries must be >= 0")
        if any(grid[i] > grid[i + 1] for i in range(len(grid) - 1)):
            raise ValueError("lambda_grid must be ascending")
        object.__setattr__(self, "lambda_grid", grid)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {NOISE_KINDS}")
        if self.signal_kind not in SIGNAL_KINDS:
            raise ValueError(f"signal_kind must be one of {SIGNAL_KINDS}")
        if self.signal_kind == "given":
            if self.given_signals is None:
                raise ValueError("signal_kind 'given' requires given_signals")
            need = 2 if self.mode == "matrix" else self.m_or_k
            if len(self.given_signals) != need:
                raise ValueError(f"given_signals must hold {need} vectors")
            object.__setattr__(
                self, "given_signals",
                tuple(np.asarray(v, dtype=float) for v in self.given_signals))

    @property
    def phi(self) -> float:
        if self.mode == "matrix":
            return math.sqrt(self.m_or_k / self.n)
        return unfolding_ratio(self.n, self.m_or_k, q=1)

    def beta(self, lam: float) -> float:
        if self.mode == "matrix":
            return lam * math.sqrt(self.phi)
        return lam * tensor_critical_beta(self.n, self.m_or_k)

    def to_json(self) -> str:
        out = {}
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, tuple):
                val = [x.tolist() if isinstance(x, np.ndarray) else x for x in val]
            out[f.name] = val
        return json.dumps(out, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SweepConfig":
        raw = json.loads(text)
        unknown = set(raw) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        if "lambda_grid" in raw:
            raw["lambda_grid"] = tuple(raw["lambda_grid"])
        if raw.get("given_signals") is not None:
            raw["given_signals"] = tuple(raw["given_signals"])
        return cls(**raw)

    @classmethod
    def from_file(cls, path: str) -> "SweepConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())


@dataclass(frozen=True)
class SpikedMatrixModel:
    """A realized rank-one perturbation: beta * v u^T + Z."""

    beta: float
    v: np.ndarray
    u: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        n, m = self.z.shape
        if self.v.shape != (n,) or self.u.shape != (m,):
            raise ValueError("signal vectors must match the noise matrix shape")
        for vec in (self.v, self.u):
            if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
                raise ValueError("signal vectors must be unit norm")

    def matrix(self) -> np.ndarray:
        return self.beta * np.outer(self.v, self.u) + self.z


@dataclass(frozen=True)
class AxisObservation:
    """Observed statistics of one unfolding (axis is None in matrix mode)."""

    axis: int | None
    s1_hat: float | None
    beta_hat: float | None
    overlap_left: float | None
    overlap_right: float | None


@dataclass(frozen=True)
class TrialRecord:
    """One trial's observations plus the predictions at the same point."""

    mode: str
    n: int
    m: int
    k: int | None
    q: int | None
    lam_index: int
    lam: float
    trial: int
    seed: int
    status: str
    observations: tuple
    pred_outlier: float
    pred_overlap_left: float
    pred_overlap_right: float


def _trial_seed_sequence(base_seed: int, lam_index: int, trial: int):
    return np.random.SeedSequence(base_seed, spawn_key=(lam_index, trial))


def _seed_word(ss) -> int:
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _draw_signal(rng, dim: int, kind: str, given=None) -> np.ndarray:
    if kind == "gaussian-unit":
        v = rng.standard_normal(dim)
        return v / np.linalg.norm(v)
    if kind == "basis":
        v = np.zeros(dim)
        v[0] = 1.0
        return v
    v = np.asarray(given, dtype=float)
    if v.shape != (dim,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("given signal must be a unit vector of the right length")
    return v


def _draw_noise(rng, shape, kind: str) -> np.ndarray:
    n = shape[0]
    if kind == "gaussian":
        return rng.standard_normal(shape) / math.sqrt(n)
    if kind == "rademacher":
        return (2.0 * rng.integers(0, 2, size=shape) - 1.0) / math.sqrt(n)
    return np.zeros(shape)


def _matrix_trial(config: SweepConfig, lam_index: int, trial: int) -> TrialRecord:
    ss = _trial_seed_sequence(config.base_seed, lam_index, trial)
    seed = _seed_word(ss)
    rng = np.random.default_rng(ss)
    n, m = config.n, config.m_or_k
    given_v = config.given_signals[0] if config.given_signals else None
    given_u = config.given_signals[1] if config.given_signals else None
    lam = config.lambda_grid[lam_index]
    phi = config.phi
    model = SpikedMatrixModel(
        beta=config.beta(lam),
        v=_draw_signal(rng, n, config.signal_kind, given_v),
        u=_draw_signal(rng, m, config.signal_kind, given_u),
        z=_draw_noise(rng, (n, m), config.noise_kind))
    pred = predict(lam, phi)
    try:
        top = dense_spectral_summary(model.matrix()).top
        est, _ = beta_hat(top.value, phi)
        obs = AxisObservation(axis=None, s1_hat=top.value, beta_hat=est,
                              overlap_left=abs(float(top.left @ model.v)),
                              overlap_right=abs(float(top.right @ model.u)))
        status = "ok"
    except (ValueError, NonConvergenceError):
        obs = AxisObservation(axis=None, s1_hat=None, beta_hat=None,
                              overlap_left=None, overlap_right=None)
        status = "failed"
    return TrialRecord(mode="matrix", n=n, m=m, k=None, q=None,
                       lam_index=lam_index, lam=lam, trial=trial, seed=seed,
                       status=status, observations=(obs,),
                       pred_outlier=pred.outlier,
                       pred_overlap_left=pred.left_overlap,
                       pred_overlap_right=pred.right_overlap)


def _tensor_trial(config: SweepConfig, lam_index: int, trial: int) -> TrialRecord:
    ss = _trial_seed_sequence(config.base_seed, lam_index, trial)
    seed = _seed_word(ss)
    c_signal, c_noise, c_power = ss.spawn(3)
    rng = np.random.default_rng(c_signal)
    n, k = config.n, config.m_or_k
    given = config.given_signals or (None,) * k
    signals = tuple(_draw_signal(rng, n, config.signal_kind, given[i])
                    for i in range(k))
    lam = config.lambda_grid[lam_index]
    model = SpikedTensorModel(order=k, dim=n, beta=config.beta(lam),
                              signals=signals, noise_seed=_seed_word(c_noise),
                              noise_kind=config.noise_kind)
    X = sample_spiked_tensor(model)
    pred = predict(lam, config.phi)
    try:
        estimates = unfolding_recovery(X, seed=_seed_word(c_power))
        status = "ok"
    except AxisConvergenceError as exc:
        estimates = exc.estimates
        status = "failed"
    by_axis = {e.axis: e for e in estimates}
    obs = []
    for axis in range(1, k + 1):
        e = by_axis.get(axis)
        if e is None:
            obs.append(AxisObservation(axis=axis, s1_hat=None, beta_hat=None,
                                       overlap_left=None, overlap_right=None))
        else:
            obs.append(AxisObservation(
                axis=axis, s1_hat=e.s1_hat, beta_hat=e.beta_hat,
                overlap_left=abs(float(e.v_hat @ signals[axis - 1])),
                overlap_right=None))
    return TrialRecord(mode="tensor", n=n, m=n ** (k - 1), k=k, q=1,
                       lam_index=lam_index, lam=lam, trial=trial, seed=seed,
                       status=status, observations=tuple(obs),
                       pred_outlier=pred.outlier,
                       pred_overlap_left=pred.left_overlap,
                       pred_overlap_right=pred.right_overlap)


def _run_trial(args):
    mode, config, lam_index, trial = args
    fn = _matrix_trial if mode == "matrix" else _tensor_trial
    return fn(config, lam_index, trial)


def _run_sweep(config: SweepConfig, jobs: int) -> list:
    tasks = [(config.mode, config, li, t)
             for li in range(len(config.lambda_grid))
             for t in range(config.trials)]
    if jobs <= 1:
        return [_run_trial(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map preserves task order, so results are index-ordered regardless
        # of completion order
        return list(pool.map(_run_trial, tasks, chunksize=1))


def run_matrix_sweep(config: SweepConfig, jobs: int = 1) -> list:
    """All (lambda, trial) records for a matrix-mode sweep, index-ordered."""
    if config.mode != "matrix":
        raise ValueError("config.mode must be 'matrix'")
    return _run_sweep(config, jobs)


def run_tensor_sweep(config: SweepConfig, jobs: int = 1) -> list:
    """All (lambda, trial) records for a tensor-mode sweep, index-ordered."""
    if config.mode != "tensor":
        raise ValueError("config.mode must be 'tensor'")
    return _run_sweep(config, jobs)


@dataclass(frozen=True)
class AggregateRow:
    """Per-(lambda, axis) means and standard errors over successful trials."""

    mode: str
    n: int
    m: int
    k: int | None
    q: int | None
    lam: float
    axis: int | None
    trials_ok: int
    trials_failed: int
    s1_hat_mean: float | None
    s1_hat_se: float | None
    beta_hat_mean: float | None
    beta_hat_se: float | None
    overlap_left_mean: float | None
    overlap_left_se: float | None
    overlap_right_mean: float | None
    overlap_right_se: float | None
    pred_outlier: float
    pred_overlap_left: float
    pred_overlap_right: float


def _mean_se(values) -> tuple:
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    arr = np.asarray(vals, dtype=float)
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def aggregate(records) -> list:
    """Group records by (lambda, axis); failed trials are counted, not used."""
    if not records:
        raise ValueError("no records to aggregate")
    groups: dict = {}
    for rec in records:
        for obs in rec.observations:
            key = (rec.lam_index, obs.axis)
            groups.setdefault(key, {"rec": rec, "obs": [], "failed": 0})
            if rec.status == "ok":
                groups[key]["obs"].append(obs)
            else:
                groups[key]["failed"] += 1
    rows = []
    for (lam_index, axis) in sorted(groups, key=lambda k: (k[0], k[1] or 0)):
        g = groups[(lam_index, axis)]
        rec = g["rec"]
        s1_m, s1_se = _mean_se([o.s1_hat for o in g["obs"]])
        bh_m, bh_se = _mean_se([o.beta_hat for o in g["obs"]])
        ol_m, ol_se = _mean_se([o.overlap_left for o in g["obs"]])
        orr_m, orr_se = _mean_se([o.overlap_right for o in g["obs"]])
        rows.append(AggregateRow(
            mode=rec.mode, n=rec.n, m=rec.m, k=rec.k, q=rec.q,
            lam=rec.lam, axis=axis, trials_ok=len(g["obs"]),
            trials_failed=g["failed"],
            s1_hat_mean=s1_m, s1_hat_se=s1_se,
            beta_hat_mean=bh_m, beta_hat_se=bh_se,
            overlap_left_mean=ol_m, overlap_left_se=ol_se,
            overlap_right_mean=orr_m, overlap_right_se=orr_se,
            pred_outlier=rec.pred_outlier,
            pred_overlap_left=rec.pred_overlap_left,
            pred_overlap_right=rec.pred_overlap_right))
    return rows


@dataclass(frozen=True)
class SpectrumHistogram:
    """Empirical singular-value histogram with the law overlay."""

    n: int
    m: int
    seed: int
    phi: float
    bin_edges: np.ndarray
    density: np.ndarray
    law_density: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def mass(self) -> float:
        return float(np.sum(self.density * np.diff(self.bin_edges)))


def spectrum_histogram(n: int, m: int, seed: int = 0, bins: int = 60) -> SpectrumHistogram:
    """Histogram of the singular values of one noise sample, as a density."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, m)) / math.sqrt(n)
    s = full_singular_values(Z)
    counts, edges = np.histogram(s, bins=bins)
    density = counts / (s.size * np.diff(edges))
    law = MpLaw(math.sqrt(m / n))
    centers = 0.5 * (edges[:-1] + edges[1:])
    law_density = np.array([singular_density(law, c) for c in centers])
    return SpectrumHistogram(n=n, m=m, seed=seed, phi=law.phi,
                             bin_edges=edges, density=density,
                             law_density=law_density)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def records_csv(records) -> str:
    """Record rows, one line per (trial, axis) observation."""
    lines = [",".join(RECORD_COLUMNS)]
    for r in records:
        for obs in r.observations:
            lines.append(",".join(_fmt(x) for x in (
                r.mode, r.n, r.m, r.k, r.q, r.lam, r.trial, r.seed,
                obs.s1_hat, obs.beta_hat, obs.overlap_left, obs.overlap_right,
                obs.axis, r.pred_outlier, r.pred_overlap_left,
                r.pred_overlap_right, r.status)))
    return "\n".join(lines) + "\n"


def aggregates_csv(rows) -> str:
    lines = [",".join(AGGREGATE_COLUMNS)]
    for a in rows:
        lines.append(",".join(_fmt(x) for x in (
            a.mode, a.n, a.m, a.k, a.q, a.lam, a.axis, a.trials_ok,
            a.trials_failed, a.s1_hat_mean, a.s1_hat_se, a.beta_hat_mean,
            a.beta_hat_se, a.overlap_left_mean, a.overlap_left_se,
            a.overlap_right_mean, a.overlap_right_se, a.pred_outlier,
            a.pred_overlap_left, a.pred_overlap_right)))
    return "\n".join(lines) + "\n"


def histogram_csv(hist: SpectrumHistogram) -> str:
    lines = ["bin_left,bin_right,bin_center,density,law_density"]
    centers = hist.centers
    for i in range(len(centers)):
        lines.append(",".join(_fmt(x) for x in (
            hist.bin_edges[i], hist.bin_edges[i + 1], centers[i],
            hist.density[i], hist.law_density[i])))
    return "\n".join(lines) + "\n"


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def run_metadata_json(config: SweepConfig) -> str:
    """Sweep provenance, including the overlap-aggregation convention."""
    meta = {
        "config": json.loads(config.to_json()),
        "overlap_aggregation": "mean of absolute overlaps over successful trials",
        "float_format": "17 significant digits",
    }
    return json.dumps(meta, indent=2, sort_keys=True)
