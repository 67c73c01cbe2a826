"""Master-equation dynamics of the V-system {|1>, |2>, |3>}.

The generator is

    drho/dt = -i(w1 P1 + w2 P2) rho - g1 (P1 rho - rho11 P3) - g2 (P2 rho - rho22 P3)
              + k2 (|1><2| rho - rho21 P3) + k1 (|2><1| rho - rho12 P3) + H.C.

written in the lab frame.  For non-Hermitian arguments the Hermitian
conjugate is continued complex-linearly, which makes the generator a linear
map with a 9x9 matrix (column-stacked ``vec``, basis order |1>, |2>, |3>).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from .coefficients import DecayCoefficients
from .errors import InvalidInitialState, PositivityViolation, StepTooLarge

HERM_TOL = 1e-10
TRACE_TOL = 1e-10
POS_TOL = 1e-8
DT_WARN = 0.05
DT_MAX = 0.5

TRAJECTORY_COLUMNS = ("t", "rho11", "rho22", "rho33", "re_rho12", "im_rho12", "emission_rate")


@dataclass(frozen=True)
class VSystem:
    omega1: float
    omega2: float
    coeffs: DecayCoefficients

    @property
    def rate_scale(self) -> float:
        c = self.coeffs
        return max(abs(self.omega1), abs(self.omega2), c.gamma1, c.gamma2, abs(c.kappa1), abs(c.kappa2))


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape(3, 3, order="F")


def ket_projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def rhs(sys: VSystem, rho: np.ndarray) -> np.ndarray:
    """Time derivative of ``rho`` from the expanded component equations."""
    r = np.asarray(rho, dtype=complex)
    w1, w2 = sys.omega1, sys.omega2
    c = sys.coeffs
    g1, g2, k1, k2 = c.gamma1, c.gamma2, complex(c.kappa1), complex(c.kappa2)
    k1c, k2c = k1.conjugate(), k2.conjugate()

    out = np.zeros((3, 3), dtype=complex)
    out[0, 0] = -2 * g1 * r[0, 0] + k2 * r[1, 0] + k2c * r[0, 1]
    out[1, 1] = -2 * g2 * r[1, 1] + k1 * r[0, 1] + k1c * r[1, 0]
    out[2, 2] = 2 * g1 * r[0, 0] + 2 * g2 * r[1, 1] - (k2 + k1c) * r[1, 0] - (k2c + k1) * r[0, 1]
    out[0, 1] = -(1j * (w1 - w2) + g1 + g2) * r[0, 1] + k2 * r[1, 1] + k1c * r[0, 0]
    out[1, 0] = -(1j * (w2 - w1) + g1 + g2) * r[1, 0] + k2c * r[1, 1] + k1 * r[0, 0]
    out[0, 2] = -(1j * w1 + g1) * r[0, 2] + k2 * r[1, 2]
    out[2, 0] = -(-1j * w1 + g1) * r[2, 0] + k2c * r[2, 1]
    out[1, 2] = -(1j * w2 + g2) * r[1, 2] + k1 * r[0, 2]
    out[2, 1] = -(-1j * w2 + g2) * r[2, 1] + k1c * r[2, 0]
    return out


def liouvillian(sys: VSystem) -> np.ndarray:
    """9x9 matrix ``L`` with ``vec(rhs(rho)) == L @ vec(rho)`` (column stacking).

    Assembled from operator products, independently of :func:`rhs`:
    ``-G rho - rho G^dag + sum_ij M_ij L_j rho L_i^dag`` with ``L_i = |3><i|``.
    """
    c = sys.coeffs
    k1, k2 = complex(c.kappa1), complex(c.kappa2)
    e = np.eye(3, dtype=complex)
    ket = [e[:, [i]] for i in range(3)]

    def op(i, j):
        return ket[i] @ ket[j].T

    g = (
        1j * (sys.omega1 * op(0, 0) + sys.omega2 * op(1, 1))
        + c.gamma1 * op(0, 0)
        + c.gamma2 * op(1, 1)
        - k2 * op(0, 1)
        - k1 * op(1, 0)
    )
    ident = np.eye(3)
    lv = -np.kron(ident, g) - np.kron(g.conj(), ident)
    # jump weights: coefficient of L_j rho L_i^dag
    jumps = {
        (0, 0): 2 * c.gamma1,
        (1, 1): 2 * c.gamma2,
        (0, 1): -(k2 + k1.conjugate()),
        (1, 0): -(k1 + k2.conjugate()),
    }
    for (i, j), w in jumps.items():
        a = op(2, j)
        b = op(2, i).conj().T
        lv = lv + w * np.kron(b.T, a)
    return lv


def check_density_matrix(rho, exc=InvalidInitialState) -> np.ndarray:
    r = np.asarray(rho, dtype=complex)
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        raise exc("density matrix must be a finite 3x3 array")
    herm = np.max(np.abs(r - r.conj().T))
    if herm > HERM_TOL:
        raise exc(f"density matrix not Hermitian (deviation {herm:.3e})")
    tr = np.trace(r)
    if abs(tr - 1.0) > TRACE_TOL:
        raise exc(f"density matrix trace {tr.real:.12g} differs from 1")
    lo = np.linalg.eigvalsh(0.5 * (r + r.conj().T))[0]
    if lo < -POS_TOL:
        raise exc(f"density matrix has negative eigenvalue {lo:.3e}")
    return r


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n, 3, 3)
    system: VSystem
    dt: float
    method: str = "rk4"
    stride: int = 1
    meta: dict = field(default_factory=dict)


def rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve(sys: VSystem, rho0, t_end: float, dt: float, stride: int = 1) -> Trajectory:
    """Fixed-step classical RK4 integration from ``t = 0`` to ``t_end``.

    The step is shrunk to ``t_end / ceil(t_end / dt)`` so the last step lands
    on ``t_end``.  Every ``stride``-th state is recorded (plus the final one).
    No trace renormalization is applied.
    """
    rho0 = check_density_matrix(rho0)
    if not (dt > 0.0 and math.isfinite(dt)):
        raise StepTooLarge(f"dt must be positive, got {dt!r}")
    if not (t_end >= 0.0 and math.isfinite(t_end)):
        raise InvalidInitialState(f"t_end must be non-negative, got {t_end!r}")
    if stride < 1:
        raise InvalidInitialState(f"stride must be >= 1, got {stride!r}")
    scale = sys.rate_scale
    if scale > 0.0:
        if dt > DT_MAX / scale:
            raise StepTooLarge(f"dt={dt:g} exceeds hard limit {DT_MAX}/rate_scale = {DT_MAX / scale:g}")
        if dt > DT_WARN / scale:
            warnings.warn(
                f"dt={dt:g} above recommended {DT_WARN}/rate_scale = {DT_WARN / scale:g}",
                RuntimeWarning,
                stacklevel=2,
            )

    n_steps = max(1, math.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0
    h = t_end / n_steps if n_steps else dt
    lv = liouvillian(sys)

    def f(y):
        return lv @ y

    y = vec(rho0)
    times, states = [0.0], [rho0.copy()]
    for step in range(1, n_steps + 1):
        y = rk4_step(f, y, h)
        if step % stride == 0 or step == n_steps:
            rho = unvec(y)
            lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
            if lo < -POS_TOL:
                raise PositivityViolation(
                    f"negative eigenvalue {lo:.3e} at t={step * h:.6g}; "
                    "check that |kappa_i| <= sqrt(gamma1 gamma2)"
                )
            times.append(step * h)
            states.append(rho)
    return Trajectory(np.array(times), np.array(states), sys, h, "rk4", stride, {"n_steps": n_steps})


def observables(traj: Trajectory) -> dict[str, np.ndarray]:
    s = traj.states
    c = traj.system.coeffs
    rho11, rho22, rho33 = s[:, 0, 0].real, s[:, 1, 1].real, s[:, 2, 2].real
    rho12 = s[:, 0, 1]
    cross = (complex(c.kappa2) + complex(c.kappa1).conjugate()) * s[:, 1, 0]
    emission = 2 * c.gamma1 * rho11 + 2 * c.gamma2 * rho22 - 2 * cross.real
    return {
        "t": np.asarray(traj.times, dtype=float),
        "rho11": rho11,
        "rho22": rho22,
        "rho33": rho33,
        "re_rho12": rho12.real,
        "im_rho12": rho12.imag,
        "excited": rho11 + rho22,
        "emission_rate": emission,
    }


# -- stationary states ----------------------------------------------------------

_OFF = ((0, 1), (0, 2), (1, 2))


def _herm_to_real(h: np.ndarray) -> np.ndarray:
    # isometric for the Hilbert-Schmidt inner product
    parts = [h[i, i].real for i in range(3)]
    for i, j in _OFF:
        parts += [math.sqrt(2) * h[i, j].real, math.sqrt(2) * h[i, j].imag]
    return np.array(parts)


def _real_to_herm(x: np.ndarray) -> np.ndarray:
    h = np.diag(x[:3]).astype(complex)
    for n, (i, j) in enumerate(_OFF):
        z = (x[3 + 2 * n] + 1j * x[4 + 2 * n]) / math.sqrt(2)
        h[i, j], h[j, i] = z, z.conjugate()
    return h


@dataclass
class StationaryStates:
    states: list  # Hermitian 3x3 arrays; unit trace where the trace is non-zero
    excited_population: list  # rho11 + rho22 of each state
    dimension: int

    @property
    def trapped(self) -> list:
        return [s for s, p in zip(self.states, self.excited_population) if p > POS_TOL]


def dark_states(sys: VSystem, tol: float = 1e-10) -> StationaryStates:
    """Basis of the stationary subspace of the generator.

    The ground state |3><3| comes first; the rest span the complement inside
    the null space (Hilbert-Schmidt orthogonal to it) and carry any trapped
    excited-state population.
    """
    lv = liouvillian(sys)
    scale = sys.rate_scale or 1.0
    ns = null_space(lv, rcond=tol * scale / max(np.linalg.norm(lv, 2), 1e-300))
    # the null space is closed under hermitian conjugation; build a real basis
    cols = []
    for v in ns.T:
        x = unvec(v)
        cols.append(_herm_to_real(0.5 * (x + x.conj().T)))
        cols.append(_herm_to_real(-0.5j * (x - x.conj().T)))
    ground = _herm_to_real(np.diag([0.0, 0.0, 1.0]).astype(complex))
    rest = []
    if cols:
        a = np.array(cols).T
        a = a - np.outer(ground, ground @ a)
        u, sv, _ = np.linalg.svd(a, full_matrices=False)
        rank = int(np.sum(sv > 1e-8 * max(sv[0], 1.0))) if sv.size else 0
        rest = [u[:, k] for k in range(rank)]

    states = [np.diag([0.0, 0.0, 1.0]).astype(complex)]
    for x in rest:
        h = _real_to_herm(x)
        tr = np.trace(h).real
        if abs(tr) > 1e-8:
            h = h / tr
        states.append(h)
    pops = [float((s[0, 0] + s[1, 1]).real) for s in states]
    return StationaryStates(states, pops, len(states))
