"""EM loop: posterior Q over edges, LP-optimal sigma, closed-form rates."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .constraints import ConstraintSet, FixedAssignments
from .errors import ValidationError
from .graph import AdjacencyGraph
from .lp import LPStructure, SigmaVector, compute_lambda
from .trace import EpisodeSet, PairStats

_CLAMP = 1e-9


@dataclass
class EMParams:
    alpha: float
    beta: float
    rho: float


@dataclass
class QMatrix:
    """Posterior edge probabilities on active pairs; implicit rho elsewhere."""

    n_users: int
    pair_keys: np.ndarray
    values: np.ndarray
    rho: float

    def get(self, i: int, j: int) -> float:
        key = i * self.n_users + j
        pos = int(np.searchsorted(self.pair_keys, key))
        if pos >= self.pair_keys.size or self.pair_keys[pos] != key:
            return self.rho
        return float(self.values[pos])

    def as_dict(self) -> dict:
        n = self.n_users
        return {(int(k) // n, int(k) % n): float(v)
                for k, v in zip(self.pair_keys, self.values)}


@dataclass
class EMConfig:
    epsilon: float = 0.001
    max_iterations: int = 500
    seed: int | None = None
    lambda_mode: str = "max-w"

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValidationError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be at least 1")


@dataclass
class EMResult:
    params: EMParams
    sigma: SigmaVector
    q: QMatrix
    iterations: int
    converged: bool
    history: list = field(default_factory=list)
    min_constraint_margin: float = float("inf")


def _values(x) -> np.ndarray:
    return x.values if hasattr(x, "values") else np.asarray(x, dtype=float)


def _check_rates(params: EMParams) -> None:
    for name, v in (("alpha", params.alpha), ("beta", params.beta)):
        if not 0.0 < v < 1.0:
            raise ValidationError(f"{name}={v} is degenerate; clamp to (0,1)")


def compute_q(m: PairStats, sigma, params: EMParams) -> QMatrix:
    """Posterior edge probability per active pair, in log space.

    z is the log odds: logit(rho) plus the per-event log likelihood ratios.
    Pairs with M = 0 take the prior exactly, not through the exponential.
    """
    _check_rates(params)
    a, b, rho = params.alpha, params.beta, params.rho
    mm = m.counts.astype(float)
    s = _values(sigma)
    z = (np.log(rho) - np.log1p(-rho)
         + mm * s * (np.log(a) - np.log(b))
         + mm * (1.0 - s) * (np.log1p(-a) - np.log1p(-b)))
    q = np.exp(-np.logaddexp(0.0, -z))
    q = np.where(m.counts == 0, rho, q)
    return QMatrix(m.n_users, m.keys, q, rho)


def compute_w(m: PairStats, q, params: EMParams) -> np.ndarray:
    """Per-pair gain of setting sigma to 1, aligned to the pair array."""
    _check_rates(params)
    a, b = params.alpha, params.beta
    qq = _values(q)
    return m.counts * (qq * (np.log(a) - np.log1p(-a))
                       + (1.0 - qq) * (np.log(b) - np.log1p(-b)))


def _clamp(v: float) -> float:
    return min(max(v, _CLAMP), 1.0 - _CLAMP)


def update_alpha(m: PairStats, sigma, q, prev: float | None = None) -> float:
    s, qq = _values(sigma), _values(q)
    den = float(np.sum(m.counts * qq))
    if den == 0.0:
        warnings.warn("no informative pairs for alpha; keeping previous value")
        return _clamp(prev) if prev is not None else 0.5
    return _clamp(float(np.sum(m.counts * s * qq)) / den)


def update_beta(m: PairStats, sigma, q, prev: float | None = None) -> float:
    s, qq = _values(sigma), _values(q)
    den = float(np.sum(m.counts * (1.0 - qq)))
    if den == 0.0:
        warnings.warn("no informative pairs for beta; keeping previous value")
        return _clamp(prev) if prev is not None else 0.5
    return _clamp(float(np.sum(m.counts * s * (1.0 - qq))) / den)


def update_rho(q: QMatrix, n: int) -> float:
    """Mean Q over all ordered pairs; inactive pairs sit at the current rho."""
    if n < 2:
        raise ValidationError("rho update needs at least 2 users")
    total = n * (n - 1)
    active = float(np.sum(q.values))
    return _clamp((active + q.rho * (total - q.values.size)) / total)


def _xlogy(x: np.ndarray, y) -> np.ndarray:
    out = np.zeros_like(x, dtype=float)
    nz = x != 0
    out[nz] = x[nz] * np.log(np.asarray(y, dtype=float) if np.ndim(y) == 0
                             else np.asarray(y, dtype=float)[nz])
    return out


def jensen_bound(m: PairStats, sigma, q, params: EMParams) -> float:
    """Expected complete-data log likelihood plus entropy, active pairs only.

    Inactive pairs with Q at the prior contribute exactly zero, so this is
    the full bound up to that constant.
    """
    a, b, rho = params.alpha, params.beta, params.rho
    s, qq = _values(sigma), _values(q)
    mm = m.counts.astype(float)
    ll_edge = mm * s * np.log(a) + mm * (1.0 - s) * np.log1p(-a) + np.log(rho)
    ll_non = mm * s * np.log(b) + mm * (1.0 - s) * np.log1p(-b) + np.log1p(-rho)
    bound = qq * ll_edge + (1.0 - qq) * ll_non
    bound -= _xlogy(qq, qq) + _xlogy(1.0 - qq, 1.0 - qq)
    return float(np.sum(bound))


def _init_params(seed) -> EMParams:
    rng = np.random.default_rng(seed)
    a, b, rho = rng.uniform(size=3)
    return EMParams(alpha=_clamp(max(a, b)), beta=_clamp(min(a, b)),
                    rho=_clamp(rho))


def _constraint_margin(cs: ConstraintSet, sigma: np.ndarray) -> float:
    if len(cs) == 0:
        return float("inf")
    sums = np.add.reduceat(sigma[cs.var_cols], cs.var_offsets[:-1])
    return float(sums.min() - 1.0)


def run_em(episodes: EpisodeSet, m: PairStats, constraints: ConstraintSet,
           fixed: FixedAssignments, config: EMConfig,
           full_constraints: ConstraintSet | None = None) -> EMResult:
    """Alternate E-step, sigma LP, and rate updates until Q stabilizes.

    One iteration is: Q from current sigma and rates; W and lambda; LP over
    the reduced constraints with fixed pairs at 1; then alpha, beta, rho.
    Convergence is the L2 norm of the active-pair Q change.  When
    full_constraints is given, the unreduced covering sums are audited after
    every M-step and the worst margin is reported.
    """
    params = _init_params(config.seed)
    structure = LPStructure(constraints)
    sigma = np.ones(m.L)
    q = QMatrix(m.n_users, m.keys, np.full(m.L, params.rho), params.rho)
    q_prev = None
    history = []
    converged = False
    margin = float("inf")
    iterations = 0

    for it in range(1, config.max_iterations + 1):
        iterations = it
        q = compute_q(m, sigma, params)
        w = compute_w(m, q, params)
        if m.L:
            lam = compute_lambda(w)
            sigma = structure.solve(w - lam, fixed)
        if full_constraints is not None:
            margin = min(margin, _constraint_margin(full_constraints, sigma))
        params = EMParams(alpha=update_alpha(m, sigma, q, prev=params.alpha),
                          beta=update_beta(m, sigma, q, prev=params.beta),
                          rho=update_rho(q, episodes.n_users))
        delta = (float(np.linalg.norm(q.values - q_prev))
                 if q_prev is not None else float("inf"))
        history.append((it, delta, jensen_bound(m, sigma, q, params)))
        q_prev = q.values
        if delta < config.epsilon:
            converged = True
            break

    return EMResult(params=params,
                    sigma=SigmaVector(m.n_users, m.keys, sigma),
                    q=q, iterations=iterations, converged=converged,
                    history=history, min_constraint_margin=margin)


def threshold_graph(q: QMatrix, threshold: float = 0.5) -> AdjacencyGraph:
    """Edges are active pairs with Q strictly above the threshold.

    Inactive pairs are never emitted; if the implicit prior exceeds the
    threshold that would be wrong, so warn.
    """
    if q.rho > threshold:
        warnings.warn(f"prior {q.rho} exceeds threshold {threshold}; "
                      "inactive pairs are still excluded")
    keys = q.pair_keys[q.values > threshold]
    return AdjacencyGraph(q.n_users, np.asarray(keys, dtype=np.int64))


def write_params(fh, result: EMResult, config: EMConfig) -> None:
    json.dump({"alpha": result.params.alpha, "beta": result.params.beta,
               "rho": result.params.rho, "iterations": result.iterations,
               "converged": result.converged, "epsilon": config.epsilon},
              fh, indent=2)
    fh.write("\n")


def write_history(fh, history) -> None:
    fh.write("iteration,q_delta,objective\n")
    for it, delta, obj in history:
        fh.write(f"{it},{delta:.12g},{obj:.12g}\n")
