"""Decay rates and interference coefficients of the V-system.

Level |1> = |j=1, m=+1> decays to |3> through e_-, level |2> = |j=1, m=-1>
through e_+.  With normalized tensors every coefficient is the free-space
rate times a contraction of the tensor with circular polarization vectors;
principal-value (level shift) contributions are not included.

Units: hbar = c = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import CauchySchwarzViolation, InvalidGeometry, NonPositiveInput
from .tensor import circular_basis, contract
from .vacuum import PlateGeometry, VacuumModel, plates_rates

CS_RTOL = 1e-10


@dataclass(frozen=True)
class AtomicDoublet:
    """Zeeman doublet |1>, |2> over the ground state |3>."""

    omega1: float
    omega2: float
    d_reduced: float = 1.0

    def __post_init__(self):
        for name in ("omega1", "omega2", "d_reduced"):
            val = getattr(self, name)
            if not (val > 0.0 and math.isfinite(val)):
                raise NonPositiveInput(f"{name} must be positive, got {val!r}")


@dataclass(frozen=True)
class DecayCoefficients:
    gamma1: float
    gamma2: float
    kappa1: complex
    kappa2: complex
    gamma0_1: float = float("nan")
    gamma0_2: float = float("nan")

    def normalized(self, reference: float | None = None) -> "DecayCoefficients":
        """Return all rates divided by ``reference`` (default: ``gamma0_1``)."""
        ref = self.gamma0_1 if reference is None else reference
        return DecayCoefficients(
            self.gamma1 / ref,
            self.gamma2 / ref,
            self.kappa1 / ref,
            self.kappa2 / ref,
            self.gamma0_1 / ref,
            self.gamma0_2 / ref,
        )

    @property
    def rate_scale(self) -> float:
        return max(self.gamma1, self.gamma2, abs(self.kappa1), abs(self.kappa2))


def gamma_free(omega: float, d_reduced: float = 1.0) -> float:
    """Free-space decay rate ``2 omega^3 d^2 / 3``."""
    if not (omega > 0.0 and math.isfinite(omega)):
        raise NonPositiveInput(f"omega must be positive, got {omega!r}")
    if not (d_reduced > 0.0 and math.isfinite(d_reduced)):
        raise NonPositiveInput(f"d_reduced must be positive, got {d_reduced!r}")
    return 2.0 * omega**3 * d_reduced**2 / 3.0


def _channel(model: VacuumModel, omega: float, gamma0: float, emits_minus: bool):
    e_plus, e_minus = circular_basis()
    c = model.tensor(omega)
    # decay forms for both polarizations at this frequency; the
    # interference term is bounded by their geometric mean
    q_pm = contract(e_minus, c, e_plus).real
    q_mp = contract(e_plus, c, e_minus).real
    if emits_minus:
        gamma, kappa = q_pm, contract(e_plus, c, e_plus)
    else:
        gamma, kappa = q_mp, contract(e_minus, c, e_minus)
    bound = math.sqrt(max(q_pm, 0.0) * max(q_mp, 0.0))
    if abs(kappa) > bound * (1.0 + CS_RTOL) + CS_RTOL * max(q_pm, q_mp, 0.0):
        raise CauchySchwarzViolation(
            f"|kappa|={abs(kappa):.6e} exceeds Cauchy-Schwarz bound {bound:.6e} at omega={omega!r}"
        )
    return gamma0 * gamma, gamma0 * kappa


def from_vacuum(model: VacuumModel, atom: AtomicDoublet) -> DecayCoefficients:
    """Coefficients from an arbitrary vacuum model by tensor contraction."""
    g01 = gamma_free(atom.omega1, atom.d_reduced)
    g02 = gamma_free(atom.omega2, atom.d_reduced)
    gamma1, kappa1 = _channel(model, atom.omega1, g01, emits_minus=True)
    gamma2, kappa2 = _channel(model, atom.omega2, g02, emits_minus=False)
    return DecayCoefficients(gamma1, gamma2, kappa1, kappa2, g01, g02)


def plates_closed_form(geom: PlateGeometry, atom: AtomicDoublet) -> DecayCoefficients:
    """Coefficients between perfectly conducting plates from the mode-sum rates."""
    if not isinstance(geom, PlateGeometry):
        raise InvalidGeometry("plates_closed_form needs a PlateGeometry")
    out = []
    for omega in (atom.omega1, atom.omega2):
        g0 = gamma_free(omega, atom.d_reduced)
        perp, par = plates_rates(omega, geom)
        out.append((g0, g0 * (perp + par) / 2.0, g0 * (perp - par) / 2.0))
    (g01, gamma1, kappa1), (g02, gamma2, kappa2) = out
    return DecayCoefficients(gamma1, gamma2, complex(kappa1), complex(kappa2), g01, g02)
