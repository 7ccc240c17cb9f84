"""Input validation helpers shared by the estimators and the functional API."""

import numpy as np


def check_vector(x, size=None, name="x"):
    """Return ``x`` as a finite 1-D float array, optionally of fixed length."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise ValueError(f"{name} must have length {size}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_matrix(a, shape=None, name="a"):
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"{name} must have shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_covariance(p, size=None, name="P", sym_tol=1e-12, psd_tol=1e-12):
    """Validate a covariance matrix: square, symmetric and positive semidefinite.

    Symmetry is judged relative to the largest entry; the PSD check allows
    eigenvalues down to ``-psd_tol * trace``.
    """
    arr = check_matrix(p, None if size is None else (size, size), name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    scale = max(np.max(np.abs(arr)), np.finfo(float).tiny)
    if np.max(np.abs(arr - arr.T)) > sym_tol * scale:
        raise ValueError(f"{name} is not symmetric")
    if not is_psd(arr, psd_tol):
        raise ValueError(f"{name} is not positive semidefinite")
    return arr


def is_psd(a, tol=1e-12):
    a = np.asarray(a, dtype=float)
    sym = 0.5 * (a + a.T)
    lam_min = np.linalg.eigvalsh(sym)[0]
    return lam_min >= -tol * max(np.trace(sym), np.finfo(float).tiny)


def symmetrize(a):
    return 0.5 * (a + a.T)


def check_positive(value, name, strict=True):
    v = float(value)
    if not np.isfinite(v) or (v <= 0 if strict else v < 0):
        bound = "> 0" if strict else ">= 0"
        raise ValueError(f"{name} must be finite and {bound}, got {value!r}")
    return v
