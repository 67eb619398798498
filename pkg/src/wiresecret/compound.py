"""Single-secret sharing as a compound wiretap channel.

Every minimal qualified set becomes a virtual legitimate receiver that pools
the outputs of its members; every maximal forbidden set becomes a virtual
eavesdropper.  Bounds on the sharing capacity are then the compound wiretap
bounds, evaluated by a deterministic search over joint laws P_UX.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._search import coarsest_fitting_steps, refine_on_simplex, simplex_grid
from ._validation import ValidationError
from .access_structure import is_antichain, maximal_forbidden, minimal_qualified, validate
from .channels import DmcBroadcast
from .info import batch_mutual_information

ZERO_TOL = 1e-12


def _clamp(raw):
    """Rates are nonnegative; roundoff-sized values are reported as exactly 0."""
    return raw if raw > ZERO_TOL else 0.0


@dataclass
class CompoundWiretapSpec:
    """Virtual receivers and eavesdroppers of the equivalent compound channel."""
    legitimate_sets: tuple
    eavesdropper_sets: tuple
    original_counts: tuple = None   # (|qualified generators|, |forbidden generators|)
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.legitimate_sets = tuple(frozenset(s) for s in self.legitimate_sets)
        self.eavesdropper_sets = tuple(frozenset(s) for s in self.eavesdropper_sets)
        if not self.legitimate_sets:
            raise ValidationError("compound channel needs at least one legitimate receiver")
        if not is_antichain(self.legitimate_sets) or not is_antichain(self.eavesdropper_sets):
            self.warnings.append("receiver families are not antichains; bounds are unaffected")
        for a in self.legitimate_sets:
            for b in self.eavesdropper_sets:
                if a <= b:
                    self.warnings.append(
                        f"legitimate set {sorted(a)} is inside eavesdropper set {sorted(b)}: "
                        "the secrecy capacity is 0")

    @property
    def reduced_counts(self):
        return len(self.legitimate_sets), len(self.eavesdropper_sets)

    @property
    def degenerate(self):
        return any(a <= b for a in self.legitimate_sets for b in self.eavesdropper_sets)


def build_compound(structure):
    """Reduce an access structure to its compound wiretap description."""
    validate(structure)
    return CompoundWiretapSpec(
        minimal_qualified(structure),
        maximal_forbidden(structure),
        original_counts=(len(structure.qualified), len(structure.forbidden)),
    )


@dataclass
class GridConfig:
    """Search settings for the joint law P_UX.

    ``steps`` is the grid resolution 1/steps.  The full P_UX grid is coarsened
    until it has at most ``max_points`` points; the U = X slice is always
    searched at the full resolution.  ``u_size`` defaults to |X| + 1.
    """
    steps: int = 16
    u_size: int = None
    refine_rounds: int = 3
    max_points: int = 100_000

    def __post_init__(self):
        if self.steps < 1 or self.refine_rounds < 0 or self.max_points < 1:
            raise ValidationError("grid steps and max_points must be >= 1, refine_rounds >= 0")


@dataclass
class BoundResult:
    value: float                 # clamped at 0
    raw: float
    distribution: np.ndarray     # achieving P_UX (rows: u, columns: x)
    warnings: list = field(default_factory=list)


@dataclass
class PairBound:
    legitimate: frozenset
    eavesdropper: frozenset
    value: float
    raw: float
    distribution: np.ndarray


@dataclass
class CompoundReport:
    spec: CompoundWiretapSpec
    lower: BoundResult
    upper: float
    upper_raw: float
    pairs: list
    grid_steps: int              # resolution actually used for the full P_UX grid


class _SetInformation:
    """Batch evaluator of I(U; Y_S) for a fixed list of receiver sets."""

    def __init__(self, channel, sets, u_size):
        self.sets = list(sets)
        self.index = {s: i for i, s in enumerate(self.sets)}
        self.kernels = [channel.kernel(s) for s in self.sets]
        self.u_size = u_size
        self.x_size = channel.input_size

    def __call__(self, flat):
        flat = np.asarray(flat, dtype=float)
        if self.u_size is None:
            # flat holds P_X and U = X
            p = flat[:, :, None] * np.eye(self.x_size)[None, :, :]
        else:
            p = flat.reshape(-1, self.u_size, self.x_size)
        out = np.empty((p.shape[0], len(self.sets)))
        for i, ker in enumerate(self.kernels):
            out[:, i] = batch_mutual_information(p @ ker)
        return out


def _candidates(nx, nu, cfg):
    """Full P_UX grid (possibly coarsened) plus the U = X slice at full resolution."""
    steps = coarsest_fitting_steps(nu * nx, cfg.steps, cfg.max_points)
    full = simplex_grid(nu * nx, steps)
    px_steps = coarsest_fitting_steps(nx, cfg.steps, cfg.max_points)
    px = simplex_grid(nx, px_steps)
    diag = np.zeros((len(px), nu, nx))
    idx = np.arange(nx)
    diag[:, idx, idx] = px
    return np.vstack([full, diag.reshape(len(px), -1)]), steps


def _boundary_warning(dist, value):
    px = dist.sum(axis=0)
    if value > 0 and np.any(px <= 1e-15):
        return [f"achieving input law {np.round(px, 6).tolist()} lies on the simplex boundary; "
                "a finer grid may change the optimum"]
    return []


def _lower_objective(info, legit, eaves):
    li = [info.index[a] for a in legit]
    ei = [info.index[b] for b in eaves]

    def combine(v):
        worst_leak = v[:, ei].max(axis=1) if ei else 0.0
        return v[:, li].min(axis=1) - worst_leak

    def f(flat):
        return combine(info(flat))
    f.combine = combine
    return f


def _pair_objective(info, a, b):
    ia, ib = info.index[a], info.index.get(b)

    def combine(v):
        return v[:, ia] - (v[:, ib] if ib is not None else 0.0)

    def f(flat):
        return combine(info(flat))
    f.combine = combine
    return f


def _prepare(spec, channel, search):
    if not isinstance(channel, DmcBroadcast):
        raise ValidationError("compound bounds need a discrete memoryless channel")
    search = search or GridConfig()
    for s in spec.legitimate_sets + spec.eavesdropper_sets:
        if max(s) > channel.K:
            raise ValidationError(f"set {sorted(s)} refers to receivers beyond K={channel.K}")
    nx = channel.input_size
    nu = search.u_size or nx + 1
    sets = list(dict.fromkeys(spec.legitimate_sets + spec.eavesdropper_sets))
    info = _SetInformation(channel, sets, nu)
    cands, steps = _candidates(nx, nu, search)
    return search, info, cands, steps, nu, nx


def _maximize(objective, cands, values, cfg, steps):
    i = int(np.argmax(values))
    return refine_on_simplex(objective, cands[i], 1.0 / steps, cfg.refine_rounds)


def _lower_from(spec, info, cands, values, search, steps, nu, nx):
    obj = _lower_objective(info, spec.legitimate_sets, spec.eavesdropper_sets)
    point, raw = _maximize(obj, cands, obj.combine(values), search, steps)
    dist = point.reshape(nu, nx)
    value = _clamp(raw)
    return BoundResult(value, raw, dist, list(spec.warnings) + _boundary_warning(dist, value))


def lower_bound_dmc(spec, channel, search=None):
    """Achievable sharing rate: max over P_UX of min_A I(U;Y_A) - max_B I(U;Y_B)."""
    search, info, cands, steps, nu, nx = _prepare(spec, channel, search)
    return _lower_from(spec, info, cands, info(cands), search, steps, nu, nx)


def compound_bounds(spec, channel, search=None):
    """Both bounds on one shared candidate set.

    Each pair's search is seeded with the lower bound's maximizer, so the
    computed upper bound can never fall below the computed lower bound.
    The information table on the grid is evaluated once and shared.
    """
    search, info, cands, steps, nu, nx = _prepare(spec, channel, search)
    values = info(cands)
    lower = _lower_from(spec, info, cands, values, search, steps, nu, nx)
    seed = lower.distribution.reshape(1, -1)
    seeded = np.vstack([cands, seed])
    values = np.vstack([values, info(seed)])
    pairs = []
    for a in spec.legitimate_sets:
        for b in (spec.eavesdropper_sets or (frozenset(),)):
            obj = _pair_objective(info, a, b if b else None)
            point, raw = _maximize(obj, seeded, obj.combine(values), search, steps)
            pairs.append(PairBound(a, b, _clamp(raw), raw, point.reshape(nu, nx)))
    best = min(pairs, key=lambda p: p.raw)
    return CompoundReport(spec, lower, _clamp(best.raw), best.raw, pairs, steps)


def upper_bound_dmc(spec, channel, search=None):
    """min over (A, B) of max over P_UX of I(U;Y_A) - I(U;Y_B), clamped at 0.

    The joint law of (Y_A, Y_B) given X affects neither term, so only P_UX
    is searched.
    """
    return compound_bounds(spec, channel, search).upper


def _px_search(channel, objective_sets, search):
    """Maximize a function of I(X; Y_S) over the input law P_X."""
    search = search or GridConfig()
    nx = channel.input_size
    sets = list(dict.fromkeys(objective_sets))
    info = _SetInformation(channel, sets, None)
    steps = coarsest_fitting_steps(nx, max(search.steps, 64), search.max_points)
    cands = simplex_grid(nx, steps)
    return info, cands, steps, search


def capacity_all_share(channel, search=None):
    """Capacity when only the full participant set is qualified.

    max over P_X of min over strict subsets B (including the empty set) of
    I(X; Y_1..Y_K) - I(X; Y_B).
    """
    K = channel.K
    full = frozenset(range(1, K + 1))
    strict = [frozenset(c) for r in range(1, K) for c in combinations(range(1, K + 1), r)]
    info, cands, steps, search = _px_search(channel, [full] + strict, search)
    fi = info.index[full]
    si = [info.index[b] for b in strict]

    def obj(flat):
        v = info(flat)
        leak = v[:, si].max(axis=1) if si else 0.0
        return v[:, fi] - leak
    point, raw = _maximize(obj, cands, obj(cands), search, steps)
    return _clamp(raw)


def capacity_two(channel, search=None):
    """Two-participant capacity: max over P_X of I(X;Y1,Y2) - max(I(X;Y1), I(X;Y2))."""
    if channel.K != 2:
        raise ValidationError(f"two-participant capacity needs K=2, got K={channel.K}")
    return capacity_all_share(channel, search)


def capacity_kK(power, noise_variances, k):
    """(k, K)-threshold capacity of the Gaussian broadcast channel in bits.

    min over k-groups A_k and (k-1)-groups A_{k-1} of
    0.5 log2((1 + sum_{A_k} P/N_l) / (1 + sum_{A_{k-1}} P/N_l)).
    The two groups are chosen independently, so the minimum pairs the k
    weakest receivers with the k-1 strongest ones.
    """
    n = np.asarray(noise_variances, dtype=float)
    K = n.size
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= K):
        raise ValidationError(f"need 1 <= k <= K={K}, got k={k}")
    if np.any(n <= 0) or not np.all(np.isfinite(n)):
        raise ValidationError("noise variances must be positive and finite")
    if power < 0:
        raise ValidationError("power must be nonnegative")
    snr = np.sort(power / n)
    weakest = sum(snr[:k].tolist())
    strongest = sum(snr[::-1][:k - 1].tolist())
    return max(0.5 * float(np.log2((1.0 + weakest) / (1.0 + strongest))), 0.0)


class CompoundBounds(BaseEstimator):
    """Estimator wrapper around :func:`compound_bounds`.

    ``fit(structure, channel)`` reduces the access structure and stores
    ``lower_bound_``, ``upper_bound_``, ``distribution_`` and ``report_``.
    """

    def __init__(self, grid=16, u_size=None, refine_rounds=3, max_grid_points=100_000):
        self.grid = grid
        self.u_size = u_size
        self.refine_rounds = refine_rounds
        self.max_grid_points = max_grid_points

    def fit(self, structure, channel):
        spec = structure if isinstance(structure, CompoundWiretapSpec) else build_compound(structure)
        cfg = GridConfig(self.grid, self.u_size, self.refine_rounds, self.max_grid_points)
        self.report_ = compound_bounds(spec, channel, cfg)
        self.lower_bound_ = self.report_.lower.value
        self.upper_bound_ = self.report_.upper
        self.distribution_ = self.report_.lower.distribution
        return self

    def gap(self):
        check_is_fitted(self, "report_")
        return self.upper_bound_ - self.lower_bound_
