"""Entropy and mutual information on explicit probability tables, in bits.

All functions use the convention 0 log 0 = 0.
"""

import numpy as np
from scipy.special import entr

from ._validation import ValidationError

# smallest eigenvalue accepted by ``logdet``; below this a matrix counts as singular
LOGDET_FLOOR = 1e-300


def entropy(p, axis=None):
    """Shannon entropy in bits.

    With ``axis`` given, each slice along that axis is treated as a
    (possibly unnormalized) table and the sum of ``-p log2 p`` over the
    slice is returned.
    """
    p = np.asarray(p, dtype=float)
    return entr(np.maximum(p, 0.0)).sum(axis=axis) / np.log(2.0)


def mutual_information(joint):
    """I(A;B) for a 2-d joint table ``joint[a, b]``."""
    joint = np.asarray(joint, dtype=float)
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    return float(entropy(pa) + entropy(pb) - entropy(joint))


def batch_mutual_information(joints):
    """I(A;B) for a batch of joint tables with shape ``(batch, |A|, |B|)``."""
    j = np.asarray(joints, dtype=float)
    return entropy(j.sum(axis=2), axis=1) + entropy(j.sum(axis=1), axis=1) - entropy(j, axis=(1, 2))


def channel_mutual_information(p_in, kernel):
    """I(In;Out) for input law ``p_in`` through row-stochastic ``kernel``."""
    p_in = np.asarray(p_in, dtype=float)
    return mutual_information(p_in[:, None] * kernel)


def conditional_mutual_information(p_ab, kernel, given_a):
    """Information quantities for the chain A -> B -> Y with ``Y ~ kernel[b]``.

    Returns I(A;Y) when ``given_a`` is false and I(B;Y|A) when it is true.
    """
    p_ab = np.asarray(p_ab, dtype=float)
    kernel = np.asarray(kernel, dtype=float)
    if not given_a:
        return mutual_information(p_ab @ kernel)
    total = 0.0
    for row in p_ab:
        pa = row.sum()
        if pa <= 0:
            continue
        total += pa * channel_mutual_information(row / pa, kernel)
    return float(total)


def logdet(a, name="matrix"):
    """log2 det of a symmetric positive definite matrix via its eigenvalues.

    The matrix is first scaled to unit diagonal, which keeps the small
    eigenvalues accurate when diagonal entries differ by many orders of
    magnitude.
    """
    a = np.asarray(a, dtype=float)
    a = (a + a.T) / 2.0
    d = np.diag(a)
    if np.any(d <= LOGDET_FLOOR):
        raise ValidationError(f"{name} is singular or indefinite (diagonal entry {d.min():.3e})")
    s = np.sqrt(d)
    lam = np.linalg.eigvalsh(a / np.outer(s, s))
    if lam[0] <= LOGDET_FLOOR:
        raise ValidationError(f"{name} is singular or indefinite (min eigenvalue {lam[0]:.3e})")
    return float(2.0 * np.sum(np.log2(s)) + np.sum(np.log2(lam)))


def half_log_ratio(num, den):
    """0.5 * log2(|num| / |den|) for positive definite matrices."""
    return 0.5 * (logdet(num, "numerator") - logdet(den, "denominator"))


def binary_entropy(p):
    return float(entropy([p, 1.0 - p]))
