"""Input validation helpers shared by the estimators and the functional API."""

import numpy as np

STOCHASTIC_TOL = 1e-12


class ValidationError(ValueError):
    """Raised when user input violates a structural assumption."""


def check_distribution(p, name="distribution", tol=STOCHASTIC_TOL):
    """Return ``p`` as a float array after checking it is a probability vector."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValidationError(f"{name} must be a nonempty 1-d array, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValidationError(f"{name} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > tol:
        raise ValidationError(f"{name} sums to {p.sum():.15g}, not 1")
    return p


def check_joint(p, name="joint distribution", tol=STOCHASTIC_TOL):
    """Check a 2-d array of nonnegative entries summing to one."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.size == 0:
        raise ValidationError(f"{name} must be a nonempty 2-d array, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValidationError(f"{name} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > tol:
        raise ValidationError(f"{name} sums to {p.sum():.15g}, not 1")
    return p


def check_stochastic(m, name="transition matrix", tol=STOCHASTIC_TOL):
    """Check that ``m`` is row-stochastic and return it as a float array."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise ValidationError(f"{name} must be a nonempty 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)) or np.any(m < 0):
        raise ValidationError(f"{name} has negative or non-finite entries")
    rows = m.sum(axis=1)
    bad = np.flatnonzero(np.abs(rows - 1.0) > tol)
    if bad.size:
        raise ValidationError(
            f"{name} row {int(bad[0])} sums to {rows[bad[0]]:.15g}, not 1")
    return m


def check_square(a, name="matrix", dim=None):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise ValidationError(f"{name} must be {dim}x{dim}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def check_symmetric(a, name="matrix", tol=1e-9, dim=None):
    """Check squareness and symmetry; return the exactly symmetrized matrix."""
    a = check_square(a, name, dim)
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > tol * scale:
        raise ValidationError(f"{name} is not symmetric")
    return (a + a.T) / 2.0


def min_eigenvalue(a):
    return float(np.linalg.eigvalsh((a + a.T) / 2.0)[0])


def check_psd(a, name="matrix", tol=1e-9, dim=None):
    a = check_symmetric(a, name, dim=dim)
    lam = min_eigenvalue(a)
    if lam < -tol:
        raise ValidationError(f"{name} is not positive semidefinite (min eigenvalue {lam:.3e})")
    return a


def check_pd(a, name="matrix", tol=0.0, dim=None):
    a = check_symmetric(a, name, dim=dim)
    lam = min_eigenvalue(a)
    if lam <= tol:
        raise ValidationError(f"{name} is not positive definite (min eigenvalue {lam:.3e})")
    return a


def as_matrix_list(mats, name, dim=None):
    """Accept a sequence of square matrices or a 3-d array."""
    out = [check_square(m, f"{name}[{i}]", dim) for i, m in enumerate(mats)]
    if out and dim is None:
        d = out[0].shape[0]
        for i, m in enumerate(out):
            if m.shape[0] != d:
                raise ValidationError(f"{name}[{i}] has dimension {m.shape[0]}, expected {d}")
    return out
