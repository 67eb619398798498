"""Rate regions of the degraded broadcast channel with layered decoding and secrecy.

Receiver ``k`` decodes messages ``1..k`` while messages ``k+1..K`` stay
secret from it.  The region is traced by evaluating rate tuples at
auxiliary laws (DMC), power splits (scalar Gaussian) or covariance chains
(MIMO Gaussian).
"""

from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ._search import refine_on_simplex, simplex_grid
from ._validation import (
    ValidationError, check_distribution, check_psd, check_stochastic, min_eigenvalue,
)
from .channels import GaussianMimoBroadcast, GaussianSisoBroadcast, check_degraded_chain
from .info import channel_mutual_information, conditional_mutual_information, half_log_ratio

BUDGET_TOL = 1e-12
ORDER_TOL = 1e-9


class ChainOrderError(ValidationError):
    """A covariance chain is not ordered S >= S_1 >= ... >= S_{K-1} >= 0."""

    def __init__(self, index, eigenvalue, message):
        super().__init__(message)
        self.index = index
        self.eigenvalue = eigenvalue


class MarkovChainError(ValidationError):
    """A joint law does not factor as U_1 -> U_2 -> ... -> X."""


@dataclass
class RateTuple:
    """Rates R_1..R_K in bits per channel use, clamped at zero."""
    rates: np.ndarray
    raw: np.ndarray

    @classmethod
    def from_raw(cls, raw):
        raw = np.asarray(raw, dtype=float)
        return cls(np.maximum(raw, 0.0), raw)

    def __len__(self):
        return len(self.rates)

    def __getitem__(self, i):
        return self.rates[i]

    @property
    def total(self):
        return float(self.rates.sum())


# ---------------------------------------------------------------- DMC

def chain_from_joint(joint, tol=1e-12):
    """Factor a joint table ``p[u_1, .., u_{K-1}, x]`` into chain conditionals.

    Raises :class:`MarkovChainError` when the table is not Markov along its axes.
    """
    p = np.asarray(joint, dtype=float)
    if abs(p.sum() - 1.0) > tol or np.any(p < 0):
        raise ValidationError("joint table must be a probability distribution")
    d = p.ndim
    marg = [p.sum(axis=tuple(j for j in range(d) if j != i)) for i in range(d)]
    dists = [marg[0]]
    rebuilt = marg[0]
    for i in range(1, d):
        pair = p.sum(axis=tuple(j for j in range(d) if j not in (i - 1, i)))
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(marg[i - 1][:, None] > 0, pair / marg[i - 1][:, None], 1.0 / pair.shape[1])
        dists.append(cond)
        rebuilt = rebuilt[..., None] * cond.reshape((1,) * (i - 1) + cond.shape)
    gap = float(np.max(np.abs(rebuilt - p)))
    if gap > 1e-10:
        raise MarkovChainError(f"joint law is not a Markov chain (max deviation {gap:.3e})")
    return dists


def check_chain(dists, channel):
    """Validate chain factors ``[P_U1, P_U2|U1, .., P_X|U_(K-1)]`` against ``channel``."""
    if len(dists) != channel.K:
        raise ValidationError(
            f"need {channel.K} chain factors (P_U1, P_U2|U1, .., P_X|U_(K-1)), got {len(dists)}")
    out = [check_distribution(dists[0], "P_U1")]
    for k, m in enumerate(dists[1:], start=2):
        m = check_stochastic(m, f"chain factor {k}")
        if m.shape[0] != out[-1].shape[-1]:
            raise ValidationError(
                f"chain factor {k} has {m.shape[0]} rows, previous alphabet has {out[-1].shape[-1]}")
        out.append(m)
    if out[-1].shape[-1] != channel.input_size:
        raise ValidationError(
            f"last chain factor must end on the channel input ({channel.input_size} symbols)")
    return out


def chain_marginals(dists):
    """Marginal law of each U_k (the last one is P_X) for chain factors ``dists``."""
    marg = [np.asarray(dists[0], dtype=float)]
    for m in dists[1:]:
        marg.append(marg[-1] @ m)
    return marg


def chain_to_input(dists):
    """Kernel from each U_k to X; the last entry is the identity."""
    K = len(dists)
    to_x = [None] * K
    to_x[K - 1] = np.eye(np.asarray(dists[-1]).shape[-1])
    for k in range(K - 2, -1, -1):
        to_x[k] = dists[k + 1] @ to_x[k + 1]
    return to_x


def layer_information(dists, channel, layer, receiver):
    """I(U_1;Y_r) for ``layer == 1``, else I(U_layer; Y_r | U_{layer-1}) (1-based)."""
    marg = chain_marginals(dists)
    to_x = chain_to_input(dists)
    W = channel.transition(receiver)
    if layer == 1:
        return channel_mutual_information(marg[0], to_x[0] @ W)
    pair = marg[layer - 2][:, None] * dists[layer - 1]
    return conditional_mutual_information(pair, to_x[layer - 1] @ W, given_a=True)


def dmc_rate_tuple(dists, channel, check_degraded=True):
    """Corner rates of the DMC region for the chain U_1 -> .. -> U_{K-1} -> X.

    ``dists`` is ``[P_U1, P_U2|U1, .., P_X|U_(K-1)]`` (with K=1 just ``[P_X]``).
    R_1 = I(U_1;Y_1) and, with U_K = X,
    R_k = I(U_k;Y_k|U_{k-1}) - I(U_k;Y_{k-1}|U_{k-1}).
    """
    if check_degraded:
        check_degraded_chain(channel)
    dists = check_chain(dists, channel)
    raw = [layer_information(dists, channel, 1, 1)]
    for k in range(2, channel.K + 1):
        raw.append(layer_information(dists, channel, k, k)
                   - layer_information(dists, channel, k, k - 1))
    return RateTuple.from_raw(raw)


# ---------------------------------------------------------------- scalar Gaussian

def _check_allocation(alloc, channel):
    p = np.asarray(alloc, dtype=float)
    if p.shape != (channel.K,):
        raise ValidationError(f"allocation needs {channel.K} entries, got shape {p.shape}")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValidationError("layer powers must be nonnegative and finite")
    if p.sum() > channel.power + BUDGET_TOL:
        raise ValidationError(f"allocation uses {p.sum():.15g} > budget {channel.power:.15g}")
    return p


def siso_rate_tuple(alloc, channel):
    """Rates of the scalar Gaussian region for layer powers P_1..P_K."""
    channel.check_degraded()
    p = _check_allocation(alloc, channel)
    n = channel.noise_variances
    tail = np.concatenate([np.cumsum(p[::-1])[::-1], [0.0]])   # tail[k] = sum_{j>=k} P_j
    raw = [0.5 * np.log2((n[0] + tail[0]) / (n[0] + tail[1]))]
    for k in range(1, channel.K):
        own = 0.5 * np.log2((n[k] + tail[k]) / (n[k] + tail[k + 1]))
        leak = 0.5 * np.log2((n[k - 1] + tail[k]) / (n[k - 1] + tail[k + 1]))
        raw.append(own - leak)
    return RateTuple.from_raw(raw)


def siso_region_samples(channel, grid_steps):
    """Rate tuples on the deterministic grid over {P_k >= 0, sum P_k <= P}."""
    if grid_steps < 1:
        raise ValidationError("grid_steps must be >= 1")
    pts = simplex_grid(channel.K + 1, grid_steps)[:, :channel.K] * channel.power
    return [(pt, siso_rate_tuple(pt, channel)) for pt in pts]


# ---------------------------------------------------------------- MIMO Gaussian

@dataclass
class CovarianceChain:
    """Cap ``S`` and residual covariances ``S_1 >= .. >= S_{K-1}``."""
    S: np.ndarray
    residuals: list = field(default_factory=list)

    def __post_init__(self):
        self.S = check_psd(self.S, "S")
        r = self.S.shape[0]
        self.residuals = [check_psd(m, f"S_{k}", tol=np.inf, dim=r)
                          for k, m in enumerate(self.residuals, start=1)]

    @property
    def K(self):
        return len(self.residuals) + 1

    def matrices(self):
        """``[S, S_1, .., S_{K-1}, 0]``."""
        return [self.S] + list(self.residuals) + [np.zeros_like(self.S)]

    def ordering_gaps(self):
        """Min eigenvalue of each adjacent difference in ``matrices()``."""
        m = self.matrices()
        return [min_eigenvalue(m[k] - m[k + 1]) for k in range(len(m) - 1)]

    def check(self, tol=ORDER_TOL):
        for k, lam in enumerate(self.ordering_gaps()):
            if lam < -tol:
                lo = "0" if k == self.K - 1 else f"S_{k + 1}"
                hi = "S" if k == 0 else f"S_{k}"
                raise ChainOrderError(
                    k + 1, lam, f"{hi} - {lo} is not PSD (min eigenvalue {lam:.3e})")

    def to_dict(self):
        return {"S": self.S.tolist(), "chain": [m.tolist() for m in self.residuals]}

    @classmethod
    def from_dict(cls, d):
        S = np.asarray(d["S"], dtype=float)
        r = int(round(np.sqrt(S.size)))
        return cls(S.reshape(r, r), [np.asarray(m, dtype=float).reshape(r, r)
                                     for m in d.get("chain", [])])


def layered_rates(sigmas, mats):
    """Raw layered rates for noise covariances ``sigmas`` and ``mats = [S, S_1, .., 0]``."""
    K = len(sigmas)
    raw = [half_log_ratio(sigmas[0] + mats[0], sigmas[0] + mats[1])]
    for k in range(1, K):
        own = half_log_ratio(sigmas[k] + mats[k], sigmas[k] + mats[k + 1])
        leak = half_log_ratio(sigmas[k - 1] + mats[k], sigmas[k - 1] + mats[k + 1])
        raw.append(own - leak)
    return raw


def logdet_gap_curve(A, B, delta, ts):
    """``0.5 log2(|A + B + t D| / |A + t D|)`` for each ``t`` in ``ts``.

    With A positive definite and B, D positive semidefinite this is a
    nonincreasing function of t >= 0.
    """
    A = check_psd(A, "A")
    B = check_psd(B, "B", dim=A.shape[0])
    D = check_psd(delta, "Delta", dim=A.shape[0])
    return np.array([half_log_ratio(A + B + t * D, A + t * D) for t in np.asarray(ts, dtype=float)])


def mimo_rate_tuple(chain, channel, tol=ORDER_TOL):
    """Rates of the MIMO region for a covariance chain."""
    if chain.K != channel.K:
        raise ValidationError(f"chain has {chain.K} layers, channel has {channel.K} receivers")
    if chain.S.shape != channel.input_cap.shape:
        raise ValidationError("chain and channel dimensions differ")
    channel.check_degraded(tol)
    chain.check(tol)
    lam = min_eigenvalue(channel.input_cap - chain.S)
    if lam < -tol:
        raise ChainOrderError(0, lam, f"chain S exceeds the input cap (min eigenvalue {lam:.3e})")
    return RateTuple.from_raw(layered_rates(channel.noise_covariances, chain.matrices()))


# ---------------------------------------------------------------- boundary search

@dataclass
class BoundaryConfig:
    grid_steps: int = 20
    refine_rounds: int = 3
    alpha_grid: int = 10
    perturbations: int = 200
    perturbation_scale: float = 0.1
    seed: int = 0


@dataclass
class BoundaryPoint:
    point: object            # allocation (SISO) or CovarianceChain (MIMO)
    rates: RateTuple
    objective: float
    heuristic: bool          # True: best found, not certified optimal
    accepted_perturbations: int = 0


def _weights(weights, K):
    w = np.asarray(weights, dtype=float)
    if w.shape != (K,) or np.any(w < 0) or not np.any(w > 0):
        raise ValidationError(f"weights must be {K} nonnegative numbers, not all zero")
    return w


def _siso_search(w, channel, cfg):
    channel.check_degraded()
    K, P = channel.K, channel.power

    def objective(batch):
        return np.array([w @ siso_rate_tuple(b[:K] * P, channel).rates for b in batch])

    grid = simplex_grid(K + 1, cfg.grid_steps)
    vals = objective(grid)
    start = grid[int(np.argmax(vals))]
    best, val = refine_on_simplex(objective, start, 1.0 / cfg.grid_steps, cfg.refine_rounds)
    alloc = np.minimum(best[:K] * P, P)
    if alloc.sum() > P:
        alloc *= P / alloc.sum()
    rates = siso_rate_tuple(alloc, channel)
    return BoundaryPoint(alloc, rates, float(w @ rates.rates), heuristic=True)


def _mimo_search(w, channel, cfg):
    channel.check_degraded()
    S = channel.input_cap
    K = channel.K

    def value(mats):
        return float(w @ np.maximum(layered_rates(channel.noise_covariances, mats), 0.0))

    grid = np.linspace(1.0, 0.0, cfg.alpha_grid + 1)
    best_alphas, best_val = (), -np.inf
    # non-increasing alpha sequences 1 >= a_1 >= .. >= a_{K-1} >= 0
    for alphas in combinations_with_replacement(grid, K - 1):
        v = value([S] + [a * S for a in alphas] + [np.zeros_like(S)])
        if v > best_val + 1e-15:
            best_alphas, best_val = alphas, v
    mats = [S] + [a * S for a in best_alphas] + [np.zeros_like(S)]
    rng = np.random.default_rng(cfg.seed)
    scale = cfg.perturbation_scale * float(np.trace(S)) / S.shape[0]
    accepted = 0
    for _ in range(cfg.perturbations if K > 1 else 0):
        k = int(rng.integers(1, K))
        g = rng.standard_normal((S.shape[0], 1))
        step = scale * (g @ g.T) * (1.0 if rng.random() < 0.5 else -1.0)
        cand = list(mats)
        cand[k] = mats[k] + step
        if any(min_eigenvalue(cand[i] - cand[i + 1]) < -ORDER_TOL for i in range(K)):
            continue
        v = value(cand)
        if v > best_val + 1e-15:
            mats, best_val = cand, v
            accepted += 1
    chain = CovarianceChain(S, mats[1:-1])
    rates = mimo_rate_tuple(chain, channel)
    return BoundaryPoint(chain, rates, float(w @ rates.rates), True, accepted)


def weighted_boundary_search(weights, channel, config=None):
    """Maximize sum_k w_k R_k over the region.

    Scalar Gaussian: simplex grid over power splits plus coordinate
    refinement.  MIMO: scaled-cap chains S_k = a_k S on a grid plus random
    rank-one perturbations, accepted only when they keep the chain ordered and
    improve the objective.  Both results are flagged as heuristic.
    """
    cfg = config or BoundaryConfig()
    w = _weights(weights, channel.K)
    if isinstance(channel, GaussianSisoBroadcast):
        return _siso_search(w, channel, cfg)
    if isinstance(channel, GaussianMimoBroadcast):
        return _mimo_search(w, channel, cfg)
    raise ValidationError("boundary search supports scalar and MIMO Gaussian channels")


# ---------------------------------------------------------------- estimators

class LayeredSisoRegion(BaseEstimator):
    """Scalar Gaussian layered region as a predictor from power splits to rates.

    ``fit(channel)`` checks the channel; ``predict(allocations)`` maps an
    ``(n_samples, K)`` array of layer powers to ``(n_samples, K)`` rates.
    """

    def __init__(self, grid_steps=20):
        self.grid_steps = grid_steps

    def fit(self, channel, y=None):
        if not isinstance(channel, GaussianSisoBroadcast):
            raise ValidationError("LayeredSisoRegion needs a GaussianSisoBroadcast channel")
        channel.check_degraded()
        self.channel_ = channel
        self.n_layers_ = channel.K
        return self

    def predict(self, allocations):
        check_is_fitted(self, "channel_")
        X = check_array(allocations, ensure_min_features=self.n_layers_)
        return np.vstack([siso_rate_tuple(row, self.channel_).rates for row in X])

    def sample(self):
        """Grid samples as ``(allocations, rates)`` arrays."""
        check_is_fitted(self, "channel_")
        pairs = siso_region_samples(self.channel_, self.grid_steps)
        return np.array([p for p, _ in pairs]), np.array([r.rates for _, r in pairs])


class BoundarySearch(BaseEstimator):
    """Estimator wrapper around :func:`weighted_boundary_search`."""

    def __init__(self, weights=None, grid_steps=20, refine_rounds=3, alpha_grid=10,
                 perturbations=200, seed=0):
        self.weights = weights
        self.grid_steps = grid_steps
        self.refine_rounds = refine_rounds
        self.alpha_grid = alpha_grid
        self.perturbations = perturbations
        self.seed = seed

    def fit(self, channel, y=None):
        w = self.weights if self.weights is not None else np.ones(channel.K)
        cfg = BoundaryConfig(self.grid_steps, self.refine_rounds, self.alpha_grid,
                             self.perturbations, seed=self.seed)
        self.result_ = weighted_boundary_search(w, channel, cfg)
        self.rates_ = self.result_.rates.rates
        self.objective_ = self.result_.objective
        return self
