"""Layered multi-secret sharing over a MISO broadcast channel.

Participant group ``1..k`` is modelled as a virtual receiver with K antennas:
the first k carry the real outputs, the rest are drowned by extra noise of
variance ``t^2 * sigma_tilde_j``.  Whitening by H^{-1} turns the virtual
receivers into a degraded MIMO channel, and the sharing region is the MIMO
layered region in the limit t -> infinity.
"""

from dataclasses import dataclass, field

import mpmath
import numpy as np

from ._validation import ValidationError, check_pd, check_psd, check_square, min_eigenvalue
from .channels import psd_order_check
from .region import CovarianceChain, RateTuple, layered_rates

MAX_CONDITION = 1e12


class ConvergenceError(RuntimeError):
    """Raised on request when the t-doubling loop does not settle."""

    def __init__(self, result):
        super().__init__(f"no convergence after {len(result.trace) - 1} doublings "
                         f"(last step {result.last_step:.3e})")
        self.result = result


@dataclass
class MisoSharingInstance:
    H: np.ndarray
    Sigma: np.ndarray
    S: np.ndarray
    sigma_tilde: np.ndarray = None   # variances for participants 2..K; default all ones

    def __post_init__(self):
        self.H = check_square(self.H, "H")
        K = self.H.shape[0]
        self.Sigma = check_psd(self.Sigma, "Sigma", dim=K)
        self.S = check_pd(self.S, "S", dim=K)
        if self.sigma_tilde is None:
            self.sigma_tilde = np.ones(K - 1)
        self.sigma_tilde = np.asarray(self.sigma_tilde, dtype=float).reshape(-1)
        if self.sigma_tilde.size != K - 1 or np.any(self.sigma_tilde <= 0):
            raise ValidationError(f"sigma_tilde needs {K - 1} positive variances")
        cond = float(np.linalg.cond(self.H))
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise ValidationError(f"H is numerically singular (condition number {cond:.3e})")
        self.condition_number = cond
        self.H_inv = np.linalg.inv(self.H)

    @property
    def K(self):
        return self.H.shape[0]

    @classmethod
    def from_dict(cls, d):
        H = np.asarray(d["H"], dtype=float)
        K = int(round(np.sqrt(H.size)))
        st = d.get("sigma_tilde")
        return cls(H.reshape(K, K), np.asarray(d["Sigma"], dtype=float).reshape(K, K),
                   np.asarray(d["S"], dtype=float).reshape(K, K),
                   None if st is None else np.asarray(st, dtype=float))


@dataclass
class VirtualCovariances:
    t: float
    sigma_v: list          # Sigma_V(k), k = 1..K
    sigma_v_prime: list    # H^{-1} Sigma_V(k) H^{-T}
    H: np.ndarray = None


def build_virtual(instance, t):
    """Noise covariances of the K virtual receivers at lift parameter ``t``."""
    if not t > 0:
        raise ValidationError(f"t must be positive, got {t}")
    K = instance.K
    Hi = instance.H_inv
    sv, svp = [], []
    for k in range(1, K + 1):
        m = instance.Sigma.copy()
        for j in range(k, K):     # 0-based j is participant j+1 > k
            m[j, j] += t * t * instance.sigma_tilde[j - 1]
        sv.append(m)
        p = Hi @ m @ Hi.T
        svp.append((p + p.T) / 2.0)
    return VirtualCovariances(float(t), sv, svp, instance.H)


@dataclass
class OrderingReport:
    min_eigenvalues: list      # for pairs (k, k+1), k = 1..K-1
    tol: float
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures


def _precise_gaps(vc, digits):
    """Min eigenvalues of the whitened differences, in ``digits``-digit arithmetic.

    Each difference is formed from the unwhitened covariances (where it is a
    single diagonal entry) and only then whitened, so the float64 roundoff of
    the stored whitened matrices does not enter.
    """
    with mpmath.workdps(digits):
        Hi = mpmath.inverse(mpmath.matrix(vc.H.tolist()))
        gaps = []
        for k in range(len(vc.sigma_v) - 1):
            d = mpmath.matrix(vc.sigma_v[k].tolist()) - mpmath.matrix(vc.sigma_v[k + 1].tolist())
            w = Hi * d * Hi.T
            w = (w + w.T) / 2
            gaps.append(float(min(mpmath.eigsy(w, eigvals_only=True))))
    return gaps


def check_ordering(vc, tol=1e-8, digits=None):
    """Verify Sigma'_V(1) >= Sigma'_V(2) >= .. >= Sigma'_V(K).

    By default the float64 whitened matrices are compared directly.  Their
    differences grow like t^2 |H^{-1}|^2, so for large t or ill-conditioned
    H the eigenvalue roundoff alone can exceed ``tol``; pass ``digits`` to
    evaluate the differences in extended precision instead.
    """
    m = vc.sigma_v_prime
    pairs = range(len(m) - 1)
    if digits is not None and vc.H is not None:
        eigs = _precise_gaps(vc, digits)
        fails = [(k + 1, k + 2) for k in pairs if eigs[k] < -tol]
    else:
        eigs = [min_eigenvalue(m[k] - m[k + 1]) for k in pairs]
        fails = [(k + 1, k + 2) for k in pairs if not psd_order_check(m[k], m[k + 1], tol)]
    return OrderingReport(eigs, tol, fails)


@dataclass
class LimitResult:
    rates: RateTuple
    converged: bool
    trace: list            # (t, raw rates) per evaluation
    last_step: float
    ordering: OrderingReport


def _rates_at(instance, chain, t):
    # |Sigma'_V(k) + A| = |Sigma_V(k) + H A H^T| / |H|^2 and the |H|^2 cancels in
    # every ratio, so the rates are evaluated on the unwhitened side where the
    # t^2 terms stay on the diagonal instead of spreading through H^{-1}.
    vc = build_virtual(instance, t)
    H = instance.H
    lifted = [H @ m @ H.T for m in chain.matrices()]
    return np.asarray(layered_rates(vc.sigma_v, lifted)), vc


def limit_rate_tuple(instance, chain, t0=10.0, tol=1e-6, max_doublings=40, strict=False):
    """Layered sharing rates in the limit of infinite lift.

    Evaluates the MIMO rate formulas with Sigma_k := Sigma'_V(k) at
    t = t0, 2 t0, 4 t0, .. until successive tuples differ by less than
    ``tol`` in max-norm.  Without convergence after ``max_doublings`` the
    result carries ``converged=False`` (or :class:`ConvergenceError` is raised
    when ``strict``).
    """
    if chain.K != instance.K:
        raise ValidationError(f"chain has {chain.K} layers, instance has K={instance.K}")
    chain.check()
    lam = min_eigenvalue(instance.S - chain.S)
    if lam < -1e-9:
        raise ValidationError(f"chain S exceeds the input cap (min eigenvalue {lam:.3e})")
    t = float(t0)
    prev, vc = _rates_at(instance, chain, t)
    trace = [(t, prev)]
    step = np.inf
    converged = instance.K == 1      # no lifted entries at all
    for _ in range(0 if converged else max_doublings):
        t *= 2.0
        cur, vc = _rates_at(instance, chain, t)
        trace.append((t, cur))
        step = float(np.max(np.abs(cur - prev)))
        prev = cur
        if step < tol:
            converged = True
            break
    if instance.K == 1:
        step = 0.0
    result = LimitResult(RateTuple.from_raw(prev), converged, trace, step, check_ordering(vc))
    if strict and not converged:
        raise ConvergenceError(result)
    return result


def sigma_tilde_sensitivity(instance, chain, values=(0.5, 1.0, 2.0), **kw):
    """Max spread of the converged rates when all sigma_tilde are set to each of ``values``."""
    tuples = []
    for v in values:
        inst = MisoSharingInstance(instance.H, instance.Sigma, instance.S,
                                   np.full(instance.K - 1, v))
        tuples.append(limit_rate_tuple(inst, chain, **kw).rates.raw)
    arr = np.array(tuples)
    return float(np.max(arr.max(axis=0) - arr.min(axis=0)))


def chain_from_dict(d):
    return CovarianceChain.from_dict(d)
