"""Independent reference computations used by the tests.

Everything here is written from definitions with plain loops or direct
enumeration, sharing no code with the package.
"""

import itertools
import math
from fractions import Fraction

import numpy as np


# ---------------------------------------------------------------- subsets

def all_subsets(K):
    return [frozenset(c) for r in range(1, K + 1) for c in itertools.combinations(range(1, K + 1), r)]


def up_closure(family, K):
    return {s for s in all_subsets(K) if any(frozenset(g) <= s for g in family)}


def down_closure(family, K):
    return {s for s in all_subsets(K) if any(s <= frozenset(g) for g in family)}


def minimal_sets(sets):
    return {s for s in sets if not any(t < s for t in sets)}


def maximal_sets(sets):
    return {s for s in sets if not any(s < t for t in sets)}


def closures_conflict(qualified, forbidden, K):
    return bool(up_closure(qualified, K) & down_closure(forbidden, K))


# ---------------------------------------------------------------- information

def entropy_of(counts):
    """Entropy in bits of a dict of probabilities."""
    return -sum(p * math.log2(p) for p in counts.values() if p > 0)


def joint_mi(table):
    """I(A;B) from a dict {(a, b): p}."""
    pa, pb = {}, {}
    for (a, b), p in table.items():
        pa[a] = pa.get(a, 0.0) + p
        pb[b] = pb.get(b, 0.0) + p
    return entropy_of(pa) + entropy_of(pb) - entropy_of(table)


def mi_pooled(px, transitions, receivers):
    """I(X; Y_S) by enumerating every tuple of outputs of the pooled receivers."""
    receivers = sorted(receivers)
    sizes = [transitions[k - 1].shape[1] for k in receivers]
    table = {}
    for x, p in enumerate(px):
        for ys in itertools.product(*[range(s) for s in sizes]):
            q = p
            for k, y in zip(receivers, ys):
                q *= transitions[k - 1][x, y]
            table[(x, ys)] = table.get((x, ys), 0.0) + q
    return joint_mi(table)


def mi_u_pooled(pux, transitions, receivers, given_u=False):
    """I(U; Y_S) or I(X; Y_S | U) from the full (u, x, y) table."""
    receivers = sorted(receivers)
    sizes = [transitions[k - 1].shape[1] for k in receivers]
    full = {}
    for u in range(pux.shape[0]):
        for x in range(pux.shape[1]):
            for ys in itertools.product(*[range(s) for s in sizes]):
                q = pux[u, x]
                for k, y in zip(receivers, ys):
                    q *= transitions[k - 1][x, y]
                full[(u, x, ys)] = q
    if not given_u:
        t = {}
        for (u, x, ys), q in full.items():
            t[(u, ys)] = t.get((u, ys), 0.0) + q
        return joint_mi(t)
    # I(X;Y|U) = H(U,X) + H(U,Y) - H(U,X,Y) - H(U)
    ux, uy, u_only = {}, {}, {}
    for (u, x, ys), q in full.items():
        ux[(u, x)] = ux.get((u, x), 0.0) + q
        uy[(u, ys)] = uy.get((u, ys), 0.0) + q
        u_only[u] = u_only.get(u, 0.0) + q
    return entropy_of(ux) + entropy_of(uy) - entropy_of(full) - entropy_of(u_only)


def chain_joint(dists):
    """Dict {(u_1, .., u_{K-1}, x): p} of the Markov chain with factors ``dists``."""
    out = {}
    sizes = [len(dists[0])] + [m.shape[1] for m in dists[1:]]
    for path in itertools.product(*[range(s) for s in sizes]):
        p = dists[0][path[0]]
        for i in range(1, len(path)):
            p *= dists[i][path[i - 1], path[i]]
        out[path] = p
    return out


def dmc_rates(dists, transitions):
    """Layered rates from the full joint of (U_1, .., U_{K-1}, X, Y_r).

    R_1 = I(U_1;Y_1); R_k = I(U_k;Y_k|U_{k-1}) - I(U_k;Y_{k-1}|U_{k-1}),
    with every conditional MI written as H(A,C)+H(B,C)-H(A,B,C)-H(C).
    """
    K = len(dists)
    chain = chain_joint(dists)

    def cmi(layer, receiver):
        W = transitions[receiver - 1]
        abc, ac, bc, c = {}, {}, {}, {}
        for path, p in chain.items():
            x = path[-1]
            for y in range(W.shape[1]):
                q = p * W[x, y]
                a = path[layer - 1]
                cond = path[layer - 2] if layer >= 2 else None
                abc[(a, y, cond)] = abc.get((a, y, cond), 0.0) + q
                ac[(a, cond)] = ac.get((a, cond), 0.0) + q
                bc[(y, cond)] = bc.get((y, cond), 0.0) + q
                c[cond] = c.get(cond, 0.0) + q
        return entropy_of(ac) + entropy_of(bc) - entropy_of(abc) - entropy_of(c)

    rates = [cmi(1, 1)]
    for k in range(2, K + 1):
        rates.append(cmi(k, k) - cmi(k, k - 1))
    return rates


# ---------------------------------------------------------------- Gaussian

def half_logdet_ratio(num, den):
    s1, l1 = np.linalg.slogdet(num)
    s2, l2 = np.linalg.slogdet(den)
    assert s1 > 0 and s2 > 0
    return 0.5 * (l1 - l2) / math.log(2)


def group_mi_logdet(power, noise, group):
    idx = [l - 1 for l in sorted(group)]
    sig = np.diag([noise[i] for i in idx])
    h = np.ones((len(idx), 1))
    return 0.5 * math.log2(np.linalg.det(np.eye(len(idx)) + np.linalg.inv(sig) @ h @ h.T * power))


def siso_rates(alloc, noise):
    """Layered scalar Gaussian rates via 1x1 log-det ratios of cumulative powers."""
    K = len(alloc)
    S = [sum(alloc[j] for j in range(k, K)) for k in range(K + 1)]   # S[0] = total, S[K] = 0
    m = lambda v: np.array([[v]])
    r = [half_logdet_ratio(m(noise[0] + S[0]), m(noise[0] + S[1]))]
    for k in range(1, K):
        r.append(half_logdet_ratio(m(noise[k] + S[k]), m(noise[k] + S[k + 1]))
                 - half_logdet_ratio(m(noise[k - 1] + S[k]), m(noise[k - 1] + S[k + 1])))
    return r


def capacity_kK_enumerated(power, noise, k):
    """Minimum over every k-group and (k-1)-group, both enumerated."""
    K = len(noise)
    idx = range(K)
    best = math.inf
    for a in itertools.combinations(idx, k):
        for b in itertools.combinations(idx, k - 1):
            num = 1 + sum(power / noise[i] for i in a)
            den = 1 + sum(power / noise[i] for i in b)
            best = min(best, 0.5 * math.log2(num / den))
    return max(best, 0.0)


def capacity_two_grid(transitions, step=1e-3):
    """Binary-input two-receiver capacity on a P_X grid of the given step."""
    best = -math.inf
    n = int(round(1 / step))
    for i in range(n + 1):
        px = np.array([i / n, 1 - i / n])
        both = mi_pooled(px, transitions, [1, 2])
        v = both - max(mi_pooled(px, transitions, [1]), mi_pooled(px, transitions, [2]))
        best = max(best, v)
    return max(best, 0.0)


def miso_limit(H, Sigma, mats):
    """Closed-form t -> infinity limit of the lifted-receiver rates.

    As t grows, the lifted receiver k only keeps its first k coordinates, so
    each log-det ratio tends to a ratio of leading k x k principal minors of
    Sigma + H A H^T.
    """
    K = H.shape[0]

    def term(k, A, B):
        if k == 0:
            return 0.0
        num = (Sigma + H @ A @ H.T)[:k, :k]
        den = (Sigma + H @ B @ H.T)[:k, :k]
        return half_logdet_ratio(num, den)

    rates = [term(1, mats[0], mats[1])]
    for k in range(2, K + 1):
        rates.append(term(k, mats[k - 1], mats[k]) - term(k - 1, mats[k - 1], mats[k]))
    return rates


# ---------------------------------------------------------------- codes

def error_probability_fraction(codewords, W, n_messages):
    """Block error probability of a single-layer code, in exact rationals.

    ``codewords`` are grouped in consecutive blocks of equal size per
    message.  MAP over codewords with ties to the smallest index (one
    codeword per message) or summed per message bin.
    """
    Wf = [[Fraction(float(v)) for v in row] for row in W]
    q = len(Wf[0])
    n = len(codewords[0])
    per = len(codewords) // n_messages
    err = Fraction(0)
    for y in itertools.product(range(q), repeat=n):
        lik = []
        for cw in codewords:
            p = Fraction(1)
            for a, b in zip(cw, y):
                p *= Wf[a][b]
            lik.append(p)
        post = [sum(lik[m * per:(m + 1) * per], Fraction(0)) for m in range(n_messages)]
        best = 0
        for m in range(1, n_messages):
            if post[m] > post[best]:
                best = m
        err += sum(lik) - post[best]
    return err / len(codewords)


def leakage_bruteforce(codewords_by_message, W):
    """(1/n) I(M; Y^n) for uniform M and uniform codeword within each message's list."""
    M = len(codewords_by_message)
    n = len(codewords_by_message[0][0])
    q = W.shape[1]
    table = {}
    for m, words in enumerate(codewords_by_message):
        for cw in words:
            for y in itertools.product(range(q), repeat=n):
                p = 1.0 / M / len(words)
                for a, b in zip(cw, y):
                    p *= W[a, b]
                table[(m, y)] = table.get((m, y), 0.0) + p
    return joint_mi(table) / n
