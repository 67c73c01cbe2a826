"""Complex 3-vector / 3x3 tensor algebra.

Vectors are plain ``numpy`` arrays of shape ``(3,)`` and dtype ``complex``
in ``(x, y, z)`` order.  Plates are normal to ``z`` and the static magnetic
field (quantization axis) points along ``y``.

Correlation tensors are stored normalized to the free-space strength at the
same frequency, so free space is exactly the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotHermitian, NotPositive

HERMITIAN_RTOL = 1e-12
PSD_RTOL = 1e-10
UNIT_ATOL = 1e-12

_S = math.sqrt(0.5)


def as_vec3(v) -> np.ndarray:
    """Coerce ``v`` to a finite complex array of shape (3,)."""
    arr = np.asarray(v, dtype=complex).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"expected 3 components, got shape {np.shape(v)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector components must be finite")
    return arr


def inner(u, v) -> complex:
    """Conjugate-linear inner product ``sum(conj(u) * v)``."""
    return complex(np.vdot(as_vec3(u), as_vec3(v)))


def is_unit(v, atol: float = UNIT_ATOL) -> bool:
    return abs(inner(v, v) - 1.0) <= atol


def circular_basis() -> tuple[np.ndarray, np.ndarray]:
    """Return ``(e_plus, e_minus)`` with ``e_pm = (z +/- i x) / sqrt(2)``."""
    e_plus = np.array([1j * _S, 0.0, _S], dtype=complex)
    e_minus = np.array([-1j * _S, 0.0, _S], dtype=complex)
    return e_plus, e_minus


@dataclass(frozen=True, eq=False)
class CorrelationTensor:
    """Normalized vacuum correlation tensor at angular frequency ``omega``.

    Construct through :func:`validate` (or the vacuum models) so that the
    Hermitian/PSD invariants hold; the matrix is made read-only.
    """

    matrix: np.ndarray
    omega: float

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (3, 3):
            raise ValueError(f"tensor must be 3x3, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "omega", float(self.omega))

    def __repr__(self):
        return f"CorrelationTensor(omega={self.omega!r}, matrix={self.matrix.tolist()!r})"


def validate(matrix, omega: float = float("nan")) -> CorrelationTensor:
    """Check Hermiticity and positive semidefiniteness.

    ``matrix`` may be a raw array or a :class:`CorrelationTensor`.  Asymmetry
    below ``HERMITIAN_RTOL`` (relative to the largest entry) is removed by
    symmetrization; anything larger raises :class:`NotHermitian`.  An
    eigenvalue below ``-PSD_RTOL`` times the largest eigenvalue magnitude
    raises :class:`NotPositive`.
    """
    if isinstance(matrix, CorrelationTensor):
        omega = matrix.omega if math.isnan(omega) else omega
        matrix = matrix.matrix
    m = np.array(matrix, dtype=complex)
    if m.shape != (3, 3):
        raise ValueError(f"tensor must be 3x3, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotHermitian("tensor has non-finite entries")

    scale = np.max(np.abs(m))
    asym = np.max(np.abs(m - m.conj().T))
    if asym > HERMITIAN_RTOL * scale:
        raise NotHermitian(f"asymmetry {asym:.3e} exceeds {HERMITIAN_RTOL:g} x {scale:.3e}")
    if asym > 0.0:
        m = 0.5 * (m + m.conj().T)

    eig = np.linalg.eigvalsh(m)
    top = np.max(np.abs(eig))
    if eig[0] < -PSD_RTOL * top:
        raise NotPositive(f"eigenvalue {eig[0]:.6e} below -{PSD_RTOL:g} x {top:.6e}")
    return CorrelationTensor(m, omega)


def contract(left, tensor, right) -> complex:
    """Bilinear form ``sum_ab left_a C_ab right_b``.

    No conjugation is applied to either vector; pass ``conj(v)`` explicitly
    where a Hermitian form is wanted.
    """
    c = tensor.matrix if isinstance(tensor, CorrelationTensor) else np.asarray(tensor)
    return complex(as_vec3(left) @ c @ as_vec3(right))


def identity_tensor(omega: float) -> CorrelationTensor:
    return CorrelationTensor(np.eye(3, dtype=complex), omega)


def diagonal_tensor(xx: float, yy: float, zz: float, omega: float) -> CorrelationTensor:
    return CorrelationTensor(np.diag([xx, yy, zz]).astype(complex), omega)
