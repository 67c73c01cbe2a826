"""Run configuration: loading, dotted-key overrides, validation, and builders.

A run is described by one TOML file (JSON is accepted too, and so is a CSV
written by this tool, whose ``# config:`` header line echoes the resolved
configuration).  The full schema is documented in ``docs/config.md``.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .coefficients import AtomicDoublet, DecayCoefficients, from_vacuum
from .errors import AnisovacError, ConfigInvalid, UnsupportedAxis
from .tensor import circular_basis
from .twophoton import Channel, TwoPhotonConfig
from .vacuum import FreeSpace, Mirror, MirrorGeometry, PlateGeometry, Plates, Tabulated, read_tabulated

COMMANDS = ("tensor", "coeffs", "evolve", "dark", "two-photon", "sweep")
SWEEP_TARGETS = COMMANDS[:-1]
MODEL_KINDS = ("free-space", "plates", "mirror", "tabulated")
AXES = ("kd", "b_over_d", "omega1", "omega2", "omega_l", "splitting")
# keys that do not influence computed data
NON_DATA_KEYS = ("workers",)
NON_DATA_OUTPUT_KEYS = ("dir", "formats")
CONFIG_MARKER = "# config: "


# -- loading ------------------------------------------------------------------


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigInvalid(f"config: cannot read {path}: {exc}") from exc
    try:
        if path.suffix == ".json":
            return json.loads(text)
        if path.suffix == ".csv":
            for line in text.splitlines():
                if line.startswith(CONFIG_MARKER):
                    return json.loads(line[len(CONFIG_MARKER):])
            raise ConfigInvalid(f"config: {path} has no '{CONFIG_MARKER.strip()}' header line")
        return tomllib.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"config: cannot parse {path}: {exc}") from exc


def parse_value(text: str):
    """Interpret an override value as a TOML literal, falling back to a string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def set_dotted(data: dict, key: str, value) -> None:
    parts = key.split(".")
    node = data
    for p in parts[:-1]:
        nxt = node.get(p)
        if not isinstance(nxt, dict):
            nxt = {}
            node[p] = nxt
        node = nxt
    node[parts[-1]] = value


def canonical_json(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)


def data_config(data: dict) -> dict:
    out = {k: v for k, v in data.items() if k not in NON_DATA_KEYS}
    if isinstance(out.get("output"), dict):
        kept = {k: v for k, v in out["output"].items() if k not in NON_DATA_OUTPUT_KEYS}
        if kept:
            out["output"] = kept
        else:
            del out["output"]
    return out


def config_hash(data: dict) -> str:
    return hashlib.sha256(canonical_json(data_config(data)).encode()).hexdigest()[:16]


# -- field access ---------------------------------------------------------------

_MISSING = object()


def _get(data: dict, path: str, default=_MISSING):
    node = data
    for p in path.split("."):
        if not isinstance(node, dict) or p not in node:
            if default is _MISSING:
                raise ConfigInvalid(f"{path}: required field is missing")
            return default
        node = node[p]
    return node


def _has(data: dict, path: str) -> bool:
    return _get(data, path, None) is not None


def _as_num(raw, path, positive=False, nonneg=False) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigInvalid(f"{path}: expected a number, got {raw!r}")
    val = float(raw)
    if not math.isfinite(val):
        raise ConfigInvalid(f"{path}: must be finite, got {raw!r}")
    if positive and not val > 0.0:
        raise ConfigInvalid(f"{path}: must be positive, got {raw!r}")
    if nonneg and val < 0.0:
        raise ConfigInvalid(f"{path}: must be non-negative, got {raw!r}")
    return val


def _num(data, path, default=_MISSING, positive=False, nonneg=False) -> float:
    return _as_num(_get(data, path, default), path, positive, nonneg)


def _int(data, path, default=_MISSING, minimum=None) -> int:
    raw = _get(data, path, default)
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigInvalid(f"{path}: expected an integer, got {raw!r}")
    if minimum is not None and raw < minimum:
        raise ConfigInvalid(f"{path}: must be >= {minimum}, got {raw!r}")
    return raw


def _complex(raw, path) -> complex:
    if isinstance(raw, bool):
        raise ConfigInvalid(f"{path}: expected a number or [re, im]")
    if isinstance(raw, (int, float)):
        return complex(raw)
    if isinstance(raw, list) and len(raw) == 2 and all(isinstance(x, (int, float)) for x in raw):
        return complex(raw[0], raw[1])
    raise ConfigInvalid(f"{path}: expected a number or [re, im], got {raw!r}")


def _vector(raw, path) -> np.ndarray:
    named = {"x": [1, 0, 0], "y": [0, 1, 0], "z": [0, 0, 1]}
    if isinstance(raw, str):
        e_plus, e_minus = circular_basis()
        if raw in ("e+", "e_plus"):
            return e_plus
        if raw in ("e-", "e_minus"):
            return e_minus
        if raw in named:
            return np.array(named[raw], dtype=complex)
        raise ConfigInvalid(f"{path}: unknown vector name {raw!r} (use x, y, z, e+, e-)")
    if isinstance(raw, list) and len(raw) == 3:
        return np.array([_complex(c, f"{path}[{i}]") for i, c in enumerate(raw)])
    raise ConfigInvalid(f"{path}: expected 3 components, got {raw!r}")


def _choice(data, path, choices, default=_MISSING) -> str:
    val = _get(data, path, default)
    if val not in choices:
        raise ConfigInvalid(f"{path}: must be one of {', '.join(choices)}, got {val!r}")
    return val


# -- builders -----------------------------------------------------------------


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple


def validate_command(data: dict, command: str | None = None) -> str:
    cmd = command if command is not None else _get(data, "command")
    if cmd not in COMMANDS:
        raise ConfigInvalid(f"command: must be one of {', '.join(COMMANDS)}, got {cmd!r}")
    return cmd


def build_atom(data: dict) -> AtomicDoublet:
    return AtomicDoublet(
        _num(data, "atom.omega1", 1.0, positive=True),
        _num(data, "atom.omega2", _get(data, "atom.omega1", 1.0), positive=True),
        _num(data, "atom.d_reduced", 1.0, positive=True),
    )


def reference_wavenumber(data: dict) -> float:
    return _num(data, "atom.omega1", 1.0, positive=True)


def build_model(data: dict, base_dir: Path | None = None):
    kind = _choice(data, "model.kind", MODEL_KINDS, "free-space")
    if kind == "free-space":
        return FreeSpace()
    if kind == "plates":
        if _has(data, "model.plates.kd"):
            k_ref = _num(data, "model.plates.k_ref", reference_wavenumber(data), positive=True)
            d = _num(data, "model.plates.kd", positive=True) / k_ref
            ratio = _num(data, "model.plates.b_over_d")
            if not 0.0 < ratio < 1.0:
                raise ConfigInvalid(f"model.plates.b_over_d: must lie in (0, 1), got {ratio!r}")
            return Plates(PlateGeometry.from_ratio(d, ratio))
        d = _num(data, "model.plates.d", positive=True)
        if _has(data, "model.plates.b_over_d"):
            ratio = _num(data, "model.plates.b_over_d")
            if not 0.0 < ratio < 1.0:
                raise ConfigInvalid(f"model.plates.b_over_d: must lie in (0, 1), got {ratio!r}")
            return Plates(PlateGeometry.from_ratio(d, ratio))
        b = _num(data, "model.plates.b")
        if not 0.0 < b < d:
            raise ConfigInvalid(f"model.plates.b: must satisfy 0 < b < d, got {b!r}")
        return Plates(PlateGeometry(d, b))
    if kind == "mirror":
        if _has(data, "model.mirror.kz"):
            k_ref = _num(data, "model.mirror.k_ref", reference_wavenumber(data), positive=True)
            return Mirror(MirrorGeometry(_num(data, "model.mirror.kz", positive=True) / k_ref))
        return Mirror(MirrorGeometry(_num(data, "model.mirror.z", positive=True)))
    path = Path(_get(data, "model.tabulated.path"))
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    try:
        return Tabulated(read_tabulated(path))
    except OSError as exc:
        raise ConfigInvalid(f"model.tabulated.path: cannot read {path}: {exc}") from exc
    except AnisovacError as exc:
        raise ConfigInvalid(f"model.tabulated.path: {exc}") from exc


def build_coefficients(data: dict, model, atom: AtomicDoublet) -> DecayCoefficients:
    """Explicit ``[coefficients]`` table if present, else derived from the model."""
    if not _has(data, "coefficients"):
        return from_vacuum(model, atom)
    g1 = _num(data, "coefficients.gamma1", nonneg=True)
    g2 = _num(data, "coefficients.gamma2", nonneg=True)
    k1 = _complex(_get(data, "coefficients.kappa1", 0.0), "coefficients.kappa1")
    k2 = _complex(_get(data, "coefficients.kappa2", 0.0), "coefficients.kappa2")
    bound = math.sqrt(g1 * g2) * (1 + 1e-10)
    for name, k in (("kappa1", k1), ("kappa2", k2)):
        if abs(k) > bound + 1e-300:
            raise ConfigInvalid(f"coefficients.{name}: |kappa| must not exceed sqrt(gamma1*gamma2)")
    return DecayCoefficients(g1, g2, k1, k2, 1.0, 1.0)


def build_two_photon(data: dict) -> TwoPhotonConfig:
    raw = _get(data, "two_photon.channels")
    if not isinstance(raw, list) or not raw:
        raise ConfigInvalid("two_photon.channels: need a non-empty list of channels")
    channels = []
    for i, ch in enumerate(raw):
        p = f"two_photon.channels[{i}]"
        if not isinstance(ch, dict):
            raise ConfigInvalid(f"{p}: expected a table")
        for key in ("omega_ig", "g", "d_fi"):
            if key not in ch:
                raise ConfigInvalid(f"{p}.{key}: required field is missing")
        omega_ig = _as_num(ch["omega_ig"], f"{p}.omega_ig")
        channels.append(Channel(omega_ig, _complex(ch["g"], f"{p}.g"), _vector(ch["d_fi"], f"{p}.d_fi")))
    return TwoPhotonConfig(
        channels,
        _num(data, "two_photon.omega_fg", 0.0),
        _num(data, "two_photon.omega_l", 0.0),
        _num(data, "two_photon.eps_pole", 1e-6, positive=True),
    )


def grid_values(grid: dict, path: str) -> tuple:
    if "values" in grid:
        vals = grid["values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigInvalid(f"{path}.values: expected a non-empty list")
        return tuple(_as_num(v, f"{path}.values[{i}]") for i, v in enumerate(vals))
    for key in ("min", "max"):
        if key not in grid:
            raise ConfigInvalid(f"{path}.{key}: required field is missing")
    lo = _as_num(grid["min"], f"{path}.min")
    hi = _as_num(grid["max"], f"{path}.max")
    count = grid.get("count", 1)
    if isinstance(count, bool) or not isinstance(count, int) or count < 1:
        raise ConfigInvalid(f"{path}.count: must be an integer >= 1, got {count!r}")
    spacing = grid.get("spacing", "linear")
    if spacing not in ("linear", "log"):
        raise ConfigInvalid(f"{path}.spacing: must be linear or log, got {spacing!r}")
    if count == 1:
        return (lo,)
    if spacing == "log":
        if not (lo > 0 and hi > 0):
            raise ConfigInvalid(f"{path}: log spacing needs positive min and max")
        return tuple(float(v) for v in np.geomspace(lo, hi, count))
    return tuple(float(v) for v in np.linspace(lo, hi, count))


def sweep_axes(data: dict) -> list[Axis]:
    raw = _get(data, "sweep.axes")
    if not isinstance(raw, list) or not raw:
        raise ConfigInvalid("sweep.axes: need a non-empty list of axes")
    axes = []
    for i, grid in enumerate(raw):
        p = f"sweep.axes[{i}]"
        if not isinstance(grid, dict) or "name" not in grid:
            raise ConfigInvalid(f"{p}.name: required field is missing")
        if grid["name"] not in AXES:
            raise UnsupportedAxis(f"{p}.name: unsupported axis {grid['name']!r} (supported: {', '.join(AXES)})")
        axes.append(Axis(grid["name"], grid_values(grid, p)))
    names = [a.name for a in axes]
    if len(set(names)) != len(names):
        raise ConfigInvalid("sweep.axes: axis names must be unique")
    return axes


def apply_axis(data: dict, name: str, value: float) -> dict:
    """Return a copy of ``data`` with one sweep parameter set."""
    out = copy.deepcopy(data)
    if name in ("kd", "b_over_d"):
        plates = out.setdefault("model", {}).setdefault("plates", {})
        if "b_over_d" not in plates and "b" in plates and "d" in plates:
            plates["b_over_d"] = plates["b"] / plates["d"]
        if name == "kd":
            plates.pop("d", None)
        plates.pop("b", None)
        plates[name] = value
    elif name in ("omega1", "omega2"):
        out.setdefault("atom", {})[name] = value
    elif name == "splitting":
        atom = out.setdefault("atom", {})
        atom["omega2"] = atom.get("omega1", 1.0) + value
    elif name == "omega_l":
        out.setdefault("two_photon", {})["omega_l"] = value
    else:
        raise UnsupportedAxis(f"unsupported axis {name!r}")
    return out
