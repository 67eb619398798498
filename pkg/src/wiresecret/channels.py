"""Broadcast channel models and the exact information quantities built on them.

Receivers are labelled ``1..K`` so that receiver sets line up with
participant sets of an access structure.
"""

from dataclasses import dataclass
from functools import reduce
from math import prod

import numpy as np
from scipy.optimize import linprog

from ._validation import (
    ValidationError, as_matrix_list, check_distribution, check_joint, check_pd,
    check_stochastic, check_symmetric, min_eigenvalue,
)
from .info import channel_mutual_information, conditional_mutual_information

MAX_JOINT_STATES = 10 ** 7
DEGRADED_TOL = 1e-9


class AlphabetOverflowError(ValidationError):
    """A product output alphabet would exceed the materialization cap."""


class DegradednessError(ValidationError):
    """The channel outputs do not form the required degraded chain."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True, eq=False)
class DmcBroadcast:
    """Discrete memoryless broadcast channel, one row-stochastic matrix per receiver."""
    transitions: tuple

    def __post_init__(self):
        mats = tuple(check_stochastic(m, f"transition[{k + 1}]").copy()
                     for k, m in enumerate(self.transitions))
        if not mats:
            raise ValidationError("a broadcast channel needs at least one receiver")
        nx = mats[0].shape[0]
        for k, m in enumerate(mats):
            if m.shape[0] != nx:
                raise ValidationError(
                    f"transition[{k + 1}] has {m.shape[0]} input rows, expected {nx}")
            m.setflags(write=False)
        object.__setattr__(self, "transitions", mats)

    @property
    def K(self):
        return len(self.transitions)

    @property
    def input_size(self):
        return self.transitions[0].shape[0]

    @property
    def output_sizes(self):
        return tuple(m.shape[1] for m in self.transitions)

    def transition(self, k):
        """Transition matrix of receiver ``k`` (1-based)."""
        _check_receiver(k, self.K)
        return self.transitions[k - 1]

    def kernel(self, receivers, max_states=MAX_JOINT_STATES):
        """Row-stochastic kernel from X to the pooled outputs of ``receivers``.

        Outputs are conditionally independent given X, so each row is the
        outer product of the per-receiver rows, flattened in receiver order.
        """
        receivers = _receiver_tuple(receivers, self.K)
        if not receivers:
            return np.ones((self.input_size, 1))
        size = self.input_size * prod(self.output_sizes[k - 1] for k in receivers)
        if size > max_states:
            raise AlphabetOverflowError(
                f"joint table for receivers {list(receivers)} has {size} states (cap {max_states})")
        mats = [self.transitions[k - 1] for k in receivers]
        return reduce(lambda a, b: (a[:, :, None] * b[:, None, :]).reshape(a.shape[0], -1), mats)

    def to_dict(self):
        return {"type": "dmc", "transitions": [m.tolist() for m in self.transitions]}


@dataclass(frozen=True, eq=False)
class GaussianSisoBroadcast:
    """Scalar Gaussian broadcast channel with noise variances N_1 > ... > N_K > 0."""
    noise_variances: tuple
    power: float

    def __post_init__(self):
        n = np.asarray(self.noise_variances, dtype=float)
        if n.ndim != 1 or n.size == 0:
            raise ValidationError("noise_variances must be a nonempty list")
        if not np.all(np.isfinite(n)) or np.any(n <= 0):
            raise ValidationError("noise variances must be finite and positive")
        p = float(self.power)
        if not np.isfinite(p) or p < 0:
            raise ValidationError(f"power must be finite and nonnegative, got {p}")
        object.__setattr__(self, "noise_variances", tuple(float(v) for v in n))
        object.__setattr__(self, "power", p)

    @property
    def K(self):
        return len(self.noise_variances)

    def ordering_violations(self):
        """Indices ``k`` (1-based) with N_{k-1} <= N_k."""
        n = self.noise_variances
        return [k + 1 for k in range(1, len(n)) if not n[k - 1] > n[k]]

    def check_degraded(self):
        bad = self.ordering_violations()
        if bad:
            n = self.noise_variances
            raise DegradednessError(
                "noise variances must be strictly decreasing; violated at "
                + ", ".join(f"N_{k - 1}={n[k - 2]:.6g} <= N_{k}={n[k - 1]:.6g}" for k in bad))

    def to_dict(self):
        return {"type": "siso", "N": list(self.noise_variances), "P": self.power}


@dataclass(frozen=True, eq=False)
class GaussianMimoBroadcast:
    """Gaussian MIMO broadcast channel Y_k = X + Z_k with Cov(Z_k) = Sigma_k."""
    noise_covariances: tuple
    input_cap: np.ndarray

    def __post_init__(self):
        sig = as_matrix_list(self.noise_covariances, "Sigma")
        if not sig:
            raise ValidationError("need at least one noise covariance")
        r = sig[0].shape[0]
        sig = tuple(check_symmetric(s, f"Sigma[{k + 1}]") for k, s in enumerate(sig))
        S = check_pd(self.input_cap, "S", dim=r)
        object.__setattr__(self, "noise_covariances", sig)
        object.__setattr__(self, "input_cap", S)

    @property
    def K(self):
        return len(self.noise_covariances)

    @property
    def dimension(self):
        return self.input_cap.shape[0]

    def ordering_report(self, tol=DEGRADED_TOL):
        """Min eigenvalue of Sigma_{k-1} - Sigma_k for each k, plus that of Sigma_K."""
        sig = self.noise_covariances
        gaps = [(k + 1, min_eigenvalue(sig[k - 1] - sig[k])) for k in range(1, len(sig))]
        return {"pairs": gaps, "last_min_eigenvalue": min_eigenvalue(sig[-1]), "tol": tol}

    def check_degraded(self, tol=DEGRADED_TOL):
        rep = self.ordering_report(tol)
        if rep["last_min_eigenvalue"] <= 0:
            raise DegradednessError(
                f"Sigma[{self.K}] must be positive definite "
                f"(min eigenvalue {rep['last_min_eigenvalue']:.3e})")
        for k, lam in rep["pairs"]:
            if lam < -tol:
                raise DegradednessError(
                    f"Sigma[{k - 1}] - Sigma[{k}] is not PSD (min eigenvalue {lam:.3e})")

    def to_dict(self):
        return {"type": "mimo", "Sigma": [s.tolist() for s in self.noise_covariances],
                "S": self.input_cap.tolist()}


def channel_from_dict(d):
    """Parse the JSON channel forms (``dmc``, ``siso``, ``mimo``)."""
    kind = d.get("type")
    if kind == "dmc":
        return DmcBroadcast(tuple(np.asarray(m, dtype=float) for m in d["transitions"]))
    if kind == "siso":
        return GaussianSisoBroadcast(tuple(d["N"]), d["P"])
    if kind == "mimo":
        S = np.asarray(d["S"], dtype=float)
        r = int(round(np.sqrt(S.size)))
        S = S.reshape(r, r)
        sig = [np.asarray(s, dtype=float).reshape(r, r) for s in d["Sigma"]]
        return GaussianMimoBroadcast(tuple(sig), S)
    raise ValidationError(f"unknown channel type {kind!r}")


def _check_receiver(k, K):
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= K:
        raise ValidationError(f"receiver index {k!r} outside 1..{K}")


def _receiver_tuple(receivers, K):
    rs = tuple(sorted(set(int(k) for k in receivers)))
    for k in rs:
        _check_receiver(k, K)
    return rs


def mutual_information_dmc(px, receivers, channel, max_states=MAX_JOINT_STATES):
    """Exact I(X; Y_S) in bits for the pooled receiver set ``S``."""
    px = check_distribution(px, "P_X")
    if px.size != channel.input_size:
        raise ValidationError(f"P_X has {px.size} entries, channel input has {channel.input_size}")
    if not receivers:
        raise ValidationError("receiver set must be nonempty")
    return channel_mutual_information(px, channel.kernel(receivers, max_states))


def conditional_mi_dmc(pux, receivers, channel, given_u=False, max_states=MAX_JOINT_STATES):
    """I(U; Y_S), or I(X; Y_S | U) when ``given_u``, for the joint ``pux[u, x]``.

    The channel acts on X only, so U -> X -> Y_S holds by construction.
    """
    pux = check_joint(pux, "P_UX")
    if pux.shape[1] != channel.input_size:
        raise ValidationError(
            f"P_UX has {pux.shape[1]} input columns, channel input has {channel.input_size}")
    if not receivers:
        raise ValidationError("receiver set must be nonempty")
    return conditional_mutual_information(pux, channel.kernel(receivers, max_states), given_u)


@dataclass
class DegradednessResult:
    """Whether P_{Y_{k-1}|X} = P_{Y_k|X} Q for some row-stochastic Q."""
    receiver: int
    feasible: bool
    residual: float     # min over stochastic Q of max |P_k Q - P_{k-1}|
    Q: np.ndarray = None


def check_degraded_dmc(channel, k, tol=DEGRADED_TOL):
    """Decide whether receiver ``k-1`` is a stochastically degraded version of ``k``.

    Solves the linear program minimizing the max-abs residual
    ``||P_k Q - P_{k-1}||_inf`` over row-stochastic ``Q``.  A residual within
    ``tol`` means feasible; otherwise the residual is the certificate.
    """
    if not 2 <= k <= channel.K:
        raise ValidationError(f"degradedness check needs 2 <= k <= {channel.K}, got {k}")
    strong = channel.transition(k)
    weak = channel.transition(k - 1)
    nx, ns = strong.shape
    nw = weak.shape[1]
    nq = ns * nw
    # variables: Q (row-major, ns x nw) then the bound s
    c = np.zeros(nq + 1)
    c[-1] = 1.0
    # A[x, (i,j)] = strong[x,i] for output column j
    A = np.zeros((nx * nw, nq))
    for j in range(nw):
        A[j::nw, j::nw] = strong
    b = weak.reshape(-1)
    ones = np.ones((nx * nw, 1))
    A_ub = np.vstack([np.hstack([A, -ones]), np.hstack([-A, -ones])])
    b_ub = np.concatenate([b, -b])
    A_eq = np.zeros((ns, nq + 1))
    for i in range(ns):
        A_eq[i, i * nw:(i + 1) * nw] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=np.ones(ns),
                  bounds=[(0, None)] * (nq + 1), method="highs")
    if res.status != 0:
        raise ValidationError(f"degradedness LP failed: {res.message}")
    Q = np.clip(res.x[:nq].reshape(ns, nw), 0.0, None)
    Q /= Q.sum(axis=1, keepdims=True)
    residual = float(np.max(np.abs(strong @ Q - weak)))
    feasible = residual <= tol
    return DegradednessResult(k, feasible, residual, Q if feasible else None)


def check_degraded_chain(channel, tol=DEGRADED_TOL):
    """Run :func:`check_degraded_dmc` for every adjacent pair; raise on the first failure."""
    results = []
    for k in range(2, channel.K + 1):
        r = check_degraded_dmc(channel, k, tol)
        results.append(r)
        if not r.feasible:
            raise DegradednessError(
                f"receiver {k - 1} is not a degraded version of receiver {k} "
                f"(LP residual {r.residual:.3e})", r)
    return results


def gaussian_group_mi(power, noise_variances, group):
    """0.5 log2(1 + sum_{l in group} P/N_l): SIMO capacity of a receiver group."""
    n = noise_variances
    snr = sum(power / n[int(l) - 1] for l in group)
    return 0.5 * float(np.log2(1.0 + snr))


def psd_order_check(A, B, tol=DEGRADED_TOL):
    """True iff A - B is positive semidefinite up to ``tol``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return min_eigenvalue(A - B) >= -tol
