"""Vacuum-anisotropy induced interference between atomic decay channels."""

from .coefficients import AtomicDoublet, DecayCoefficients, from_vacuum, gamma_free, plates_closed_form
from .dynamics import VSystem, dark_states, evolve, liouvillian, observables, rhs
from .tensor import CorrelationTensor, circular_basis, contract, validate
from .twophoton import Channel, TwoPhotonConfig, channel_decomposition, find_zero, transition_probability
from .vacuum import (
    FreeSpace,
    Mirror,
    MirrorGeometry,
    PlateGeometry,
    Plates,
    Tabulated,
    TabulatedVacuum,
    mirror_tensor,
    plates_rates,
    plates_tensor,
    tabulated_tensor,
)

__version__ = "0.1.0"
