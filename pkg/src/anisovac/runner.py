"""Command execution, parameter sweeps, and result files."""

from __future__ import annotations

import copy
import datetime as _dt
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .coefficients import AtomicDoublet, DecayCoefficients
from .config import (
    CONFIG_MARKER,
    SWEEP_TARGETS,
    Axis,
    _choice,
    _complex,
    _get,
    _has,
    _int,
    _num,
    apply_axis,
    build_atom,
    build_coefficients,
    build_model,
    build_two_photon,
    canonical_json,
    config_hash,
    data_config,
    grid_values,
    sweep_axes,
    validate_command,
)
from .dynamics import TRAJECTORY_COLUMNS, VSystem, dark_states, evolve, ket_projector, observables
from .errors import ConfigInvalid
from .twophoton import SCAN_COLUMNS, channel_decomposition, find_zero, split_terms
from .vacuum import TABLE_COLUMNS, tensor_row

log = logging.getLogger(__name__)

COEFF_COLUMNS = (
    "omega1", "omega2", "gamma1", "gamma2", "re_kappa1", "im_kappa1",
    "re_kappa2", "im_kappa2", "kappa1_over_gamma1", "kappa2_over_gamma2",
    "gamma0_1", "gamma0_2",
)
DARK_COLUMNS = ("index", "trace", "excited_population", "rho11", "rho22", "rho33", "re_rho12", "im_rho12")
EVOLVE_POINT_COLUMNS = ("t", "rho11", "rho22", "rho33", "re_rho12", "im_rho12", "excited", "emission_rate")
DARK_POINT_COLUMNS = ("n_stationary", "max_trapped_population")


@dataclass
class Table:
    columns: tuple
    rows: list
    extra_header: list = field(default_factory=list)


@dataclass
class SweepResult:
    axes: list
    table: Table
    config_hash: str
    version: str = __version__
    timestamp: str = ""


# -- single-point evaluations -----------------------------------------------------


def _ratio(a, b):
    return a / b if b != 0 else math.nan


def _coeff_row(atom: AtomicDoublet, c: DecayCoefficients, units: str) -> list:
    ref = c.gamma0_1 if units == "normalized" and math.isfinite(c.gamma0_1) else 1.0
    k1, k2 = complex(c.kappa1) / ref, complex(c.kappa2) / ref
    return [
        atom.omega1, atom.omega2, c.gamma1 / ref, c.gamma2 / ref,
        k1.real, k1.imag, k2.real, k2.imag,
        _ratio(complex(c.kappa1).real, c.gamma1), _ratio(complex(c.kappa2).real, c.gamma2),
        c.gamma0_1 / ref, c.gamma0_2 / ref,
    ]


def _units(data):
    return _choice(data, "output.units", ("normalized", "absolute"), "normalized")


def _system(data, base_dir):
    atom = build_atom(data)
    if _has(data, "coefficients"):
        coeffs = build_coefficients(data, None, atom)
    else:
        coeffs = build_coefficients(data, build_model(data, base_dir), atom)
    return VSystem(atom.omega1, atom.omega2, coeffs)


def _initial_state(data) -> np.ndarray:
    raw = _get(data, "evolve.initial", "1")
    named = {
        "1": [1, 0, 0], "2": [0, 1, 0], "3": [0, 0, 1],
        "symmetric": [1, 1, 0], "antisymmetric": [1, -1, 0],
    }
    if isinstance(raw, int) and not isinstance(raw, bool):
        raw = str(raw)
    if isinstance(raw, str):
        if raw not in named:
            raise ConfigInvalid(f"evolve.initial: unknown state {raw!r} (use {', '.join(named)} or a 3x3 matrix)")
        return ket_projector(named[raw])
    if isinstance(raw, list) and len(raw) == 3 and all(isinstance(r, list) and len(r) == 3 for r in raw):
        return np.array([[_complex(v, f"evolve.initial[{i}][{j}]") for j, v in enumerate(row)]
                         for i, row in enumerate(raw)])
    raise ConfigInvalid("evolve.initial: expected a state name or a 3x3 matrix")


def _trajectory(data, base_dir):
    sys = _system(data, base_dir)
    rho0 = _initial_state(data)
    t_end = _num(data, "evolve.t_end", nonneg=True)
    dt = _num(data, "evolve.dt", positive=True)
    stride = _int(data, "evolve.stride", 1, minimum=1)
    return evolve(sys, rho0, t_end, dt, stride)


def tensor_point(data, base_dir=None) -> list:
    model = build_model(data, base_dir)
    omega = _num(data, "tensor.omega", positive=True)
    return [omega, *tensor_row(model.tensor(omega))]


def coeffs_point(data, base_dir=None) -> list:
    atom = build_atom(data)
    model = None if _has(data, "coefficients") else build_model(data, base_dir)
    return _coeff_row(atom, build_coefficients(data, model, atom), _units(data))


def evolve_point(data, base_dir=None) -> list:
    obs = observables(_trajectory(data, base_dir))
    return [float(obs[c][-1]) for c in EVOLVE_POINT_COLUMNS]


def dark_point(data, base_dir=None) -> list:
    res = dark_states(_system(data, base_dir))
    return [res.dimension, max(res.excited_population)]


def two_photon_point(data, base_dir=None) -> list:
    cfg = build_two_photon(data)
    terms = channel_decomposition(cfg, build_model(data, base_dir))
    return [cfg.omega_l, *split_terms(terms)]


POINTS = {
    "tensor": (("omega",) + TABLE_COLUMNS[1:], tensor_point),
    "coeffs": (COEFF_COLUMNS, coeffs_point),
    "evolve": (EVOLVE_POINT_COLUMNS, evolve_point),
    "dark": (DARK_POINT_COLUMNS, dark_point),
    "two-photon": (SCAN_COLUMNS, two_photon_point),
}


# -- full commands ------------------------------------------------------------------


def _tensor_table(data, base_dir):
    model = build_model(data, base_dir)
    if _has(data, "tensor.grid"):
        omegas = grid_values(_get(data, "tensor.grid"), "tensor.grid")
    else:
        omegas = (_num(data, "tensor.omega", positive=True),)
    rows = []
    for w in omegas:
        if not w > 0:
            raise ConfigInvalid(f"tensor.grid: frequencies must be positive, got {w!r}")
        rows.append([w, *tensor_row(model.tensor(w))])
    return Table(TABLE_COLUMNS, rows)


def _coeffs_table(data, base_dir):
    return Table(COEFF_COLUMNS, [coeffs_point(data, base_dir)], [f"units: {_units(data)}"])


def _evolve_table(data, base_dir):
    traj = _trajectory(data, base_dir)
    obs = observables(traj)
    rows = [list(r) for r in zip(*(obs[c] for c in TRAJECTORY_COLUMNS))]
    return Table(TRAJECTORY_COLUMNS, rows, [f"method: {traj.method}", f"step: {traj.dt:.17g}"])


def _dark_table(data, base_dir):
    res = dark_states(_system(data, base_dir))
    rows = []
    for i, (s, p) in enumerate(zip(res.states, res.excited_population)):
        rows.append([i, float(np.trace(s).real), p, s[0, 0].real, s[1, 1].real, s[2, 2].real,
                     s[0, 1].real, s[0, 1].imag])
    return Table(DARK_COLUMNS, rows, [f"n_stationary: {res.dimension}"])


def _two_photon_table(data, base_dir):
    cfg = build_two_photon(data)
    model = build_model(data, base_dir)
    if _has(data, "two_photon.scan"):
        omegas = grid_values(_get(data, "two_photon.scan"), "two_photon.scan")
    else:
        omegas = (cfg.omega_l,)
    rows = [[w, *split_terms(channel_decomposition(cfg.at(w), model))] for w in omegas]
    extra = []
    if _has(data, "two_photon.zero_bracket"):
        br = _get(data, "two_photon.zero_bracket")
        if not (isinstance(br, list) and len(br) == 2):
            raise ConfigInvalid("two_photon.zero_bracket: expected [lo, hi]")
        zero = find_zero(cfg, model, (br[0], br[1]))
        extra.append(f"zero: {'none' if zero is None else format(zero, '.17g')}")
    return Table(SCAN_COLUMNS, rows, extra)


def _point_worker(args):
    target, data, base_dir = args
    return POINTS[target][1](data, base_dir)


def sweep(data: dict, base_dir=None, workers: int = 1) -> SweepResult:
    target = _choice(data, "sweep.target", SWEEP_TARGETS)
    axes: list[Axis] = sweep_axes(data)
    points = []
    for combo in itertools.product(*(a.values for a in axes)):
        d = data
        for a, v in zip(axes, combo):
            d = apply_axis(d, a.name, v)
        points.append((combo, d))
    jobs = [(target, d, base_dir) for _, d in points]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_point_worker, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_point_worker(j) for j in jobs]
    columns = tuple(a.name for a in axes) + POINTS[target][0]
    rows = [list(combo) + list(res) for (combo, _), res in zip(points, results)]
    return SweepResult(axes, Table(columns, rows, [f"target: {target}"]), config_hash(data))


COMMAND_TABLES = {
    "tensor": _tensor_table,
    "coeffs": _coeffs_table,
    "evolve": _evolve_table,
    "dark": _dark_table,
    "two-photon": _two_photon_table,
}


# -- output -------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def render_data(table: Table) -> str:
    lines = [",".join(table.columns)]
    lines += [",".join(_fmt(v) for v in row) for row in table.rows]
    return "\n".join(lines) + "\n"


def render_csv(table: Table, data: dict, command: str, timestamp: str | None = None) -> str:
    if timestamp is None:
        timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    header = [
        f"# anisovac {__version__}",
        f"# command: {command}",
        f"# config_hash: {config_hash(data)}",
        CONFIG_MARKER + canonical_json(data_config(data)),
        *(f"# {h}" for h in table.extra_header),
        f"# timestamp: {timestamp}",
    ]
    return "\n".join(header) + "\n" + render_data(table)


def data_section(text: str) -> str:
    """CSV text without its ``#`` header lines."""
    return "".join(ln for ln in text.splitlines(keepends=True) if not ln.startswith("#"))


def write_plot(csv_path: Path, svg_path: Path) -> bool:
    """Plot every numeric column against the first one; never raises."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        body = data_section(csv_path.read_text(encoding="utf-8")).splitlines()
        names = body[0].split(",")
        arr = np.array([[float(v) for v in ln.split(",")] for ln in body[1:]], ndmin=2)
        fig, ax = plt.subplots(figsize=(6, 4))
        for k, name in enumerate(names[1:], start=1):
            ax.plot(arr[:, 0], arr[:, k], label=name)
        ax.set_xlabel(names[0])
        ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(svg_path, format="svg")
        plt.close(fig)
        return True
    except Exception as exc:  # plotting is best-effort
        log.warning("plot %s not written: %s", svg_path, exc)
        return False


# -- entry point ---------------------------------------------------------------------


def _resolve_paths(data: dict, base_dir: Path | None) -> dict:
    if _get(data, "model.kind", None) == "tabulated" and _has(data, "model.tabulated.path"):
        p = Path(data["model"]["tabulated"]["path"])
        if base_dir is not None and not p.is_absolute():
            data["model"]["tabulated"]["path"] = str((base_dir / p).resolve())
    return data


def compute(data: dict, base_dir: Path | None = None, command: str | None = None, workers: int = 1) -> Table:
    cmd = validate_command(data, command)
    if cmd == "sweep":
        return sweep(data, base_dir, workers).table
    return COMMAND_TABLES[cmd](data, base_dir)


def run(data: dict, base_dir: Path | None = None, command: str | None = None,
        timestamp: str | None = None) -> list[Path]:
    """Execute a configuration and write its result files; returns the paths."""
    data = _resolve_paths(copy.deepcopy(data), base_dir)
    cmd = validate_command(data, command)
    data["command"] = cmd
    workers = _int(data, "workers", 1, minimum=1)
    formats = _get(data, "output.formats", ["csv"])
    if isinstance(formats, str):
        formats = [f.strip() for f in formats.split(",") if f.strip()]
    bad = [f for f in formats if f not in ("csv", "svg")]
    if bad:
        raise ConfigInvalid(f"output.formats: unsupported format(s) {', '.join(bad)}")
    outdir = Path(_get(data, "output.dir", "out"))

    table = compute(data, base_dir, cmd, workers)
    target = outdir / f"{cmd}-{config_hash(data)}"
    try:
        target.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigInvalid(f"output.dir: cannot create {target}: {exc}") from exc
    csv_path = target / "data.csv"
    csv_path.write_text(render_csv(table, data, cmd, timestamp), encoding="utf-8")
    paths = [csv_path]
    if "svg" in formats and write_plot(csv_path, target / "plot.svg"):
        paths.append(target / "plot.svg")
    return paths
