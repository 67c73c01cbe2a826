"""Two-photon (absorb, then emit into the vacuum) transition probability.

For channels i with intermediate frequency ``omega_ig``, coupling ``g_i`` and
emission dipole ``d_fi``, the rate is the quadratic form

    T = sum_ij g_i g_j^* conj(d_fj) . C(omega_l - omega_fg) . d_fi
              / ((omega_ig - omega_l)(omega_jg - omega_l))
      = conj(v) . C . v,   v = sum_i g_i d_fi / (omega_ig - omega_l)

with hbar = 1 and C the normalized vacuum tensor.  Cross terms i != j are
the interference between decay channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import BracketContainsPole, ConfigError, NonPositiveEmissionFrequency, PoleProximity
from .tensor import CorrelationTensor, PSD_RTOL, as_vec3, contract
from .vacuum import VacuumModel

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SCAN_COLUMNS = ("omega_l", "T_total", "T_direct", "T_interference")


@dataclass(frozen=True, eq=False)
class Channel:
    omega_ig: float
    g: complex
    d_fi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "d_fi", as_vec3(self.d_fi))
        object.__setattr__(self, "g", complex(self.g))
        if not (math.isfinite(self.omega_ig) and np.isfinite(self.g)):
            raise ConfigError("channel frequency and coupling must be finite")


@dataclass(frozen=True)
class TwoPhotonConfig:
    channels: Sequence[Channel]
    omega_fg: float
    omega_l: float
    eps_pole: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if not self.channels:
            raise ConfigError("at least one channel is required")

    @property
    def omega_emit(self) -> float:
        return self.omega_l - self.omega_fg

    def at(self, omega_l: float) -> "TwoPhotonConfig":
        return replace(self, omega_l=float(omega_l))


def coupling(d_ig, field_amplitude) -> complex:
    """Laser coupling ``d_ig . E_l`` (no conjugation, hbar = 1)."""
    return complex(as_vec3(d_ig) @ as_vec3(field_amplitude))


def _detunings(cfg: TwoPhotonConfig) -> np.ndarray:
    det = np.array([ch.omega_ig - cfg.omega_l for ch in cfg.channels])
    close = np.abs(det) <= cfg.eps_pole
    if np.any(close):
        k = int(np.argmax(close))
        raise PoleProximity(
            f"omega_l={cfg.omega_l!r} within {cfg.eps_pole:g} of channel {k} pole {cfg.channels[k].omega_ig!r}"
        )
    return det


def _tensor(cfg: TwoPhotonConfig, vac: VacuumModel) -> CorrelationTensor:
    w = cfg.omega_emit
    if not w > 0.0:
        raise NonPositiveEmissionFrequency(f"emitted frequency omega_l - omega_fg = {w!r} must be positive")
    return vac.tensor(w)


def amplitude_vector(cfg: TwoPhotonConfig) -> np.ndarray:
    det = _detunings(cfg)
    v = np.zeros(3, dtype=complex)
    for ch, dn in zip(cfg.channels, det):
        v = v + ch.g * ch.d_fi / dn
    return v


def transition_probability(cfg: TwoPhotonConfig, vac: VacuumModel) -> float:
    c = _tensor(cfg, vac)
    v = amplitude_vector(cfg)
    t = contract(v.conj(), c, v).real
    if t < 0.0:
        # admissible only at the level of the PSD validation tolerance
        bound = PSD_RTOL * np.linalg.norm(c.matrix, 2) * float(np.vdot(v, v).real)
        if -t > bound:
            raise ConfigError(f"negative transition probability {t:.3e}; tensor is not PSD")
        t = 0.0
    return float(t)


def channel_decomposition(cfg: TwoPhotonConfig, vac: VacuumModel) -> np.ndarray:
    """Matrix of terms ``T[i, j]``; its sum is the transition probability."""
    c = _tensor(cfg, vac)
    det = _detunings(cfg)
    n = len(cfg.channels)
    out = np.empty((n, n), dtype=complex)
    for i, ci in enumerate(cfg.channels):
        for j, cj in enumerate(cfg.channels):
            form = contract(cj.d_fi.conj(), c, ci.d_fi)
            out[i, j] = ci.g * cj.g.conjugate() * form / (det[i] * det[j])
    return out


def split_terms(terms: np.ndarray) -> tuple[float, float, float]:
    """``(total, direct, interference)`` from a decomposition matrix."""
    direct = float(np.trace(terms).real)
    total = float(terms.sum().real)
    return total, direct, total - direct


def scan(cfg: TwoPhotonConfig, vac: VacuumModel, omegas) -> list[tuple[float, float, float, float]]:
    rows = []
    for w in omegas:
        total, direct, inter = split_terms(channel_decomposition(cfg.at(w), vac))
        rows.append((float(w), total, direct, inter))
    return rows


def golden_section(f, a: float, b: float, rtol: float = 1e-12, max_iter: int = 500) -> float:
    """Minimize a unimodal ``f`` on ``[a, b]``; returns the abscissa."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= rtol * max(abs(a), abs(b), 1e-300):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return c if fc <= fd else d


def find_zero(
    cfg: TwoPhotonConfig,
    vac: VacuumModel,
    bracket: tuple[float, float],
    n_scan: int = 2001,
    rel_threshold: float = 1e-12,
) -> float | None:
    """Laser frequency in the open ``bracket`` where the transition vanishes.

    T is a non-negative form, so zeros are found as minima: a grid scan picks
    local minima, golden-section search refines each, and the best is
    accepted if it lies below ``rel_threshold`` times the scan maximum.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not hi > lo:
        raise ConfigError(f"bracket must satisfy lo < hi, got {bracket!r}")
    poles = [ch.omega_ig for ch in cfg.channels if lo < ch.omega_ig < hi]
    if poles:
        raise BracketContainsPole(f"bracket ({lo!r}, {hi!r}) contains pole(s) {poles!r}")

    def t_of(w):
        return transition_probability(cfg.at(w), vac)

    # cell-centred grid never touches the bracket ends, which may be poles
    grid = lo + (hi - lo) * (np.arange(n_scan) + 0.5) / n_scan
    vals = np.array([t_of(w) for w in grid])
    vmax = float(np.max(vals))
    if vmax == 0.0:
        return float(grid[0])
    end_poles = [p for p in (ch.omega_ig for ch in cfg.channels) if p in (lo, hi)]

    cands = [k for k in range(n_scan)
             if (k == 0 or vals[k] <= vals[k - 1]) and (k == n_scan - 1 or vals[k] <= vals[k + 1])]
    best_w, best_v = None, math.inf
    for k in cands:
        left = grid[k - 1] if k > 0 else (grid[0] if lo in end_poles else lo)
        right = grid[k + 1] if k < n_scan - 1 else (grid[-1] if hi in end_poles else hi)
        w = golden_section(t_of, left, right)
        v = t_of(w)
        if v < best_v:
            best_w, best_v = w, v
    if best_w is not None and best_v < rel_threshold * vmax:
        return float(best_w)
    return None
