"""Dense complex-matrix helpers: adjoints, Hermitian spectra, operator square roots.

Everything works on plain numpy arrays (complex128) and treats inputs as
immutable values; nothing here mutates its arguments.
"""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceFailure, DimensionMismatch, NegativeSpectrum, NotHermitian

HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-10
EIGENVALUE_FLOOR = 1e-14


def as_complex_matrix(m) -> np.ndarray:
    """Coerce to a 2-d complex array, rejecting non-finite entries."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or min(a.shape) < 1:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains NaN or Inf entries")
    return a


def _require_square(a: np.ndarray) -> np.ndarray:
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


def adjoint(m) -> np.ndarray:
    """Conjugate transpose."""
    return as_complex_matrix(m).conj().T


def trace(m) -> complex:
    return complex(np.trace(_require_square(as_complex_matrix(m))))


def multiply(a, b) -> np.ndarray:
    x, y = as_complex_matrix(a), as_complex_matrix(b)
    if x.shape[1] != y.shape[0]:
        raise DimensionMismatch(f"cannot multiply {x.shape} by {y.shape}")
    return x @ y


def add(a, b) -> np.ndarray:
    x, y = as_complex_matrix(a), as_complex_matrix(b)
    if x.shape != y.shape:
        raise DimensionMismatch(f"cannot add {x.shape} and {y.shape}")
    return x + y


def scale(c, m) -> np.ndarray:
    return complex(c) * as_complex_matrix(m)


def frobenius_norm(m) -> float:
    return float(np.linalg.norm(as_complex_matrix(m)))


def real_inner_product(a, b) -> float:
    """Re tr{a† b}; the inner product under which matrices flatten to real vectors."""
    x, y = as_complex_matrix(a), as_complex_matrix(b)
    if x.shape != y.shape:
        raise DimensionMismatch(f"inner product needs equal shapes, got {x.shape} and {y.shape}")
    return float(np.vdot(x, y).real)


def hermiticity_defect(m) -> float:
    """max |m - m†| over entries."""
    a = _require_square(as_complex_matrix(m))
    return float(np.abs(a - a.conj().T).max())


def hermitian_eigendecomposition(m, tol: float = HERMITICITY_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (real, ascending) and unitary eigenvectors of a Hermitian matrix.

    The input is symmetrized as (m + m†)/2 before decomposition so that
    roundoff accumulated in upstream products cannot leak into the spectrum.
    """
    a = _require_square(as_complex_matrix(m))
    defect = float(np.abs(a - a.conj().T).max())
    if defect > tol:
        raise NotHermitian(f"max |m - m†| = {defect:.3e} exceeds tolerance {tol:.1e}")
    sym = (a + a.conj().T) / 2
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"eigensolver did not converge: {exc}") from exc
    return eigenvalues, eigenvectors


def _rebuild_hermitian(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = (v * w) @ v.conj().T
    return (out + out.conj().T) / 2


def sqrt_psd(m) -> np.ndarray:
    """Hermitian PSD square root; eigenvalues in [-1e-10, 0) are clamped to zero."""
    w, v = hermitian_eigendecomposition(m)
    if w[0] < -PSD_TOL:
        raise NegativeSpectrum(f"eigenvalue {w[0]:.3e} below -{PSD_TOL:.1e}")
    return _rebuild_hermitian(v, np.sqrt(np.maximum(w, 0.0)))


def inverse_sqrt_psd(m, floor: float = EIGENVALUE_FLOOR) -> np.ndarray:
    """Pseudo inverse square root: modes with eigenvalue <= floor map to zero.

    Used to restore POVM completeness after a trial step; the floor keeps the
    map finite when outcomes have decayed and the sum lost rank.
    """
    w, v = hermitian_eigendecomposition(m)
    if w[0] < -PSD_TOL:
        raise NegativeSpectrum(f"eigenvalue {w[0]:.3e} below -{PSD_TOL:.1e}")
    f = np.where(w > floor, 1.0 / np.sqrt(np.maximum(w, floor)), 0.0)
    return _rebuild_hermitian(v, f)
