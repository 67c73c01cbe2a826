"""Vacuum models: frequency -> normalized correlation tensor.

Units have c = 1, so the wavenumber equals the angular frequency.  Every model
exposes ``tensor(omega) -> CorrelationTensor``.

Geometry conventions: plates sit at z = 0 and z = -d with the atom at z = -b;
a single mirror is the z = 0 plane with the atom at distance z from it.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .errors import (
    ConfigError,
    InvalidGeometry,
    NonPositiveDistance,
    NonPositiveFrequency,
    NonPositiveWavenumber,
    NumericalError,
    OutOfRange,
    ValidationFailed,
)
from .tensor import CorrelationTensor, diagonal_tensor, identity_tensor, validate

COMPONENTS = ("xx", "xy", "xz", "yx", "yy", "yz", "zx", "zy", "zz")
TABLE_COLUMNS = ("omega",) + tuple(f"{p}_{c}" for c in COMPONENTS for p in ("re", "im"))


class VacuumModel(Protocol):
    def tensor(self, omega: float) -> CorrelationTensor: ...


def _check_omega(omega: float) -> float:
    omega = float(omega)
    if not (omega > 0.0 and math.isfinite(omega)):
        raise NonPositiveFrequency(f"frequency must be positive and finite, got {omega!r}")
    return omega


# -- geometries ---------------------------------------------------------------


@dataclass(frozen=True)
class PlateGeometry:
    d: float
    b: float

    def __post_init__(self):
        if not (self.d > 0.0 and math.isfinite(self.d)):
            raise InvalidGeometry(f"plate separation d must be positive, got {self.d!r}")
        if not (0.0 < self.b < self.d):
            raise InvalidGeometry(f"atom depth b must satisfy 0 < b < d, got b={self.b!r}, d={self.d!r}")

    @classmethod
    def from_ratio(cls, d: float, b_over_d: float) -> "PlateGeometry":
        return cls(d, b_over_d * d)


@dataclass(frozen=True)
class MirrorGeometry:
    z: float

    def __post_init__(self):
        if not (self.z > 0.0 and math.isfinite(self.z)):
            raise NonPositiveDistance(f"mirror distance must be positive, got {self.z!r}")


# -- closed forms -------------------------------------------------------------


def mode_cutoff(kd: float) -> int:
    """Largest integer n >= 0 with n < kd/pi (strict)."""
    ratio = kd / math.pi
    n = math.ceil(ratio) - 1
    return max(n, 0)


def plates_rates(k: float, geom: PlateGeometry) -> tuple[float, float]:
    """Normalized rates ``(perp, par)`` for dipoles normal / tangential to the plates."""
    k = float(k)
    if not (k > 0.0 and math.isfinite(k)):
        raise NonPositiveWavenumber(f"wavenumber must be positive, got {k!r}")
    if not isinstance(geom, PlateGeometry):
        raise InvalidGeometry("plates_rates needs a PlateGeometry")
    kd = k * geom.d
    pref = 3.0 * math.pi / (2.0 * kd)
    n_max = mode_cutoff(kd)
    if n_max == 0:
        return pref, 0.0
    n = np.arange(1, n_max + 1, dtype=float)
    u2 = (math.pi * n / kd) ** 2
    phase = math.pi * n * geom.b / geom.d
    perp = pref + 2.0 * pref * float(np.sum((1.0 - u2) * np.cos(phase) ** 2))
    par = pref * float(np.sum((1.0 + u2) * np.sin(phase) ** 2))
    return perp, par


def mirror_rates(x: float) -> tuple[float, float]:
    """Normalized ``(perp, par)`` rates in front of a perfect mirror, ``x = 2 k z``.

    Obtained from the image-dipole field: the reflected field of the image at
    distance 2z adds to the free-space radiation-reaction field.  For small x
    a Taylor series replaces the closed form, which cancels catastrophically.
    """
    x = float(x)
    if not (x > 0.0 and math.isfinite(x)):
        raise NonPositiveDistance(f"mirror argument 2kz must be positive, got {x!r}")
    if x < 1e-2:
        x2 = x * x
        # cos/x^2 - sin/x^3 = -1/3 + x^2/30 - x^4/840 + ...
        f_perp = -1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0
        # sin/x + cos/x^2 - sin/x^3 = 2/3 - 2 x^2/15 + x^4/140 - ...
        f_par = 2.0 / 3.0 - 2.0 * x2 / 15.0 + x2 * x2 / 140.0
    else:
        s, c = math.sin(x), math.cos(x)
        f_perp = c / x**2 - s / x**3
        f_par = s / x + c / x**2 - s / x**3
    return 1.0 - 3.0 * f_perp, 1.0 - 1.5 * f_par


def plates_tensor(omega: float, geom: PlateGeometry) -> CorrelationTensor:
    omega = _check_omega(omega)
    perp, par = plates_rates(omega, geom)
    return diagonal_tensor(par, par, perp, omega)


def mirror_tensor(omega: float, geom: MirrorGeometry) -> CorrelationTensor:
    omega = _check_omega(omega)
    if not isinstance(geom, MirrorGeometry):
        raise NonPositiveDistance("mirror_tensor needs a MirrorGeometry")
    perp, par = mirror_rates(2.0 * omega * geom.z)
    return diagonal_tensor(par, par, perp, omega)


def free_space(omega: float) -> CorrelationTensor:
    return identity_tensor(_check_omega(omega))


# -- tabulated data -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TabulatedVacuum:
    """Sampled tensors with per-component linear interpolation in omega."""

    omegas: np.ndarray
    matrices: np.ndarray  # shape (n, 3, 3)

    def __post_init__(self):
        om = np.array(self.omegas, dtype=float).reshape(-1)
        mats = np.array(self.matrices, dtype=complex)
        if mats.shape != (om.size, 3, 3):
            raise ConfigError(f"expected {om.size} 3x3 samples, got shape {mats.shape}")
        if om.size == 0:
            raise ConfigError("tabulated vacuum needs at least one sample")
        if np.any(np.diff(om) <= 0.0):
            raise ConfigError("tabulated omegas must be strictly increasing")
        for i in range(om.size):
            try:
                mats[i] = validate(mats[i], om[i]).matrix
            except NumericalError as exc:
                raise ValidationFailed(f"sample {i} at omega={om[i]!r}: {exc}") from exc
        om.setflags(write=False)
        mats.setflags(write=False)
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "matrices", mats)

    @classmethod
    def from_samples(cls, samples: Sequence[tuple[float, object]]) -> "TabulatedVacuum":
        omegas = [float(w) for w, _ in samples]
        mats = [m.matrix if isinstance(m, CorrelationTensor) else m for _, m in samples]
        return cls(np.array(omegas), np.array(mats, dtype=complex))


def tabulated_tensor(table: TabulatedVacuum, omega: float) -> CorrelationTensor:
    omega = float(omega)
    om = table.omegas
    if not (om[0] <= omega <= om[-1]):
        raise OutOfRange(f"omega={omega!r} outside tabulated range [{om[0]!r}, {om[-1]!r}]")
    j = int(np.searchsorted(om, omega))
    if om[j] == omega:
        return CorrelationTensor(table.matrices[j], omega)
    t = (omega - om[j - 1]) / (om[j] - om[j - 1])
    m = (1.0 - t) * table.matrices[j - 1] + t * table.matrices[j]
    try:
        return validate(m, omega)
    except NumericalError as exc:
        raise ValidationFailed(f"interpolated tensor at omega={omega!r}: {exc}") from exc


def read_tabulated(source) -> TabulatedVacuum:
    """Read a tabulated-vacuum CSV (path or text stream).

    Columns: ``omega`` then ``re_xx, im_xx, ..., re_zz, im_zz`` (row-major).
    An optional ``norm`` column marks raw tensors; each row is divided by its
    value to obtain the normalized tensor.  Lines starting with ``#`` are
    comments.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            return read_tabulated(fh)
    lines = [ln for ln in source if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    header = [h.strip() for h in (reader.fieldnames or [])]
    missing = [c for c in TABLE_COLUMNS if c not in header]
    if missing:
        raise ConfigError(f"tabulated vacuum file missing columns: {', '.join(missing)}")
    has_norm = "norm" in header
    omegas, mats = [], []
    for lineno, row in enumerate(reader, start=2):
        row = {k.strip(): v for k, v in row.items()}
        try:
            vals = [float(row[f"re_{c}"]) + 1j * float(row[f"im_{c}"]) for c in COMPONENTS]
            omegas.append(float(row["omega"]))
            norm = float(row["norm"]) if has_norm else 1.0
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"tabulated vacuum data row {lineno}: {exc}") from exc
        if not norm > 0.0:
            raise ConfigError(f"tabulated vacuum data row {lineno}: norm must be positive")
        mats.append(np.array(vals).reshape(3, 3) / norm)
    return TabulatedVacuum(np.array(omegas), np.array(mats))


def tensor_row(t: CorrelationTensor) -> list[float]:
    """Flatten a tensor into the tabulated column order (without omega)."""
    out = []
    for z in t.matrix.reshape(-1):
        out.extend((float(z.real), float(z.imag)))
    return out


def write_tabulated(tensors: Sequence[CorrelationTensor], dest=None) -> str:
    """Serialize tensors in the tabulated format; returns the text written."""
    buf = io.StringIO()
    buf.write(",".join(TABLE_COLUMNS) + "\n")
    for t in tensors:
        buf.write(",".join(f"{v:.17g}" for v in [t.omega, *tensor_row(t)]) + "\n")
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text, encoding="utf-8")
    return text


# -- model objects ------------------------------------------------------------


@dataclass(frozen=True)
class FreeSpace:
    def tensor(self, omega: float) -> CorrelationTensor:
        return free_space(omega)


@dataclass(frozen=True)
class Plates:
    geom: PlateGeometry

    def tensor(self, omega: float) -> CorrelationTensor:
        return plates_tensor(omega, self.geom)


@dataclass(frozen=True)
class Mirror:
    geom: MirrorGeometry

    def tensor(self, omega: float) -> CorrelationTensor:
        return mirror_tensor(omega, self.geom)


@dataclass(frozen=True)
class Tabulated:
    table: TabulatedVacuum = field(repr=False)

    def tensor(self, omega: float) -> CorrelationTensor:
        omega = _check_omega(omega)
        return tabulated_tensor(self.table, omega)


@dataclass(frozen=True)
class Constant:
    """Same tensor at every frequency (testing and quick what-if studies)."""

    matrix: np.ndarray = field(repr=False)

    def tensor(self, omega: float) -> CorrelationTensor:
        return validate(self.matrix, _check_omega(omega))
