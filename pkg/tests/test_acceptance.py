"""Acceptance criteria, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they are
produced; they are also repeated in the terminal summary.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from anisovac.cli import main
from anisovac.coefficients import AtomicDoublet, DecayCoefficients, from_vacuum, plates_closed_form
from anisovac.dynamics import VSystem, evolve, ket_projector, liouvillian, observables
from anisovac.runner import data_section
from anisovac.tensor import circular_basis, contract
from anisovac.twophoton import (
    Channel,
    TwoPhotonConfig,
    amplitude_vector,
    channel_decomposition,
    find_zero,
    transition_probability,
)
from anisovac.vacuum import Constant, FreeSpace, PlateGeometry, Plates, mirror_rates, plates_rates

from acceptance_log import report
from oracles import random_density_matrix, random_psd, two_photon_double_sum

PI = math.pi
X, Y, Z = np.eye(3)
E_PLUS, E_MINUS = circular_basis()
CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def rel(a, b):
    return abs(a - b) / abs(b)


def test_1_below_cutoff_identities(rng):
    worst_perp = worst_kappa = 0.0
    par_zero = True
    for _ in range(100):
        kd = rng.uniform(1e-3, PI)
        geom = PlateGeometry.from_ratio(kd, rng.uniform(0.01, 0.99))
        perp, par = plates_rates(1.0, geom)
        par_zero &= par == 0.0 and Plates(geom).tensor(1.0).matrix[0, 0] == 0.0
        worst_perp = max(worst_perp, abs(perp * 2 * kd / (3 * PI) - 1))
        c = from_vacuum(Plates(geom), AtomicDoublet(1.0, 1.0))
        worst_kappa = max(worst_kappa, abs(c.kappa1 / c.gamma1 - 1), abs(c.kappa2 / c.gamma2 - 1))
    ok = par_zero and worst_perp <= 1e-14 and worst_kappa <= 1e-14
    report("1 below-cutoff identities", ok,
           f"par==0: {par_zero}, max|perp*2kd/3pi-1|={worst_perp:.2e}, max|kappa/gamma-1|={worst_kappa:.2e}")


def test_2_hand_checked_plate_point():
    geom = PlateGeometry(1.5 * PI, 0.75 * PI)
    perp, par = plates_rates(1.0, geom)
    c = from_vacuum(Plates(geom), AtomicDoublet(1.0, 1.0)).normalized()
    errs = [abs(perp - 1), abs(par - 13 / 9), abs(c.gamma1 - 11 / 9), abs(c.kappa1 - (-2 / 9)),
            abs(c.gamma2 - 11 / 9), abs(c.kappa2 - (-2 / 9))]
    report("2 plate point kd=3pi/2, b=d/2", max(errs) <= 1e-12,
           f"perp={perp!r}, par={par!r}, gamma={c.gamma1!r}, kappa={c.kappa1.real!r}, max err={max(errs):.2e}")


def test_3_route_equivalence():
    worst = 0.0
    for kd in np.linspace(0.5, 30.0, 10):
        for ratio in np.linspace(0.05, 0.95, 10):
            for w2 in (0.8, 1.0, 1.25):
                geom = PlateGeometry.from_ratio(kd, ratio)
                atom = AtomicDoublet(1.0, w2, 0.7)
                a, b = plates_closed_form(geom, atom), from_vacuum(Plates(geom), atom)
                for x, y in ((a.gamma1, b.gamma1), (a.gamma2, b.gamma2),
                             (a.kappa1, b.kappa1), (a.kappa2, b.kappa2)):
                    worst = max(worst, abs(x - y) / abs(x) if x != 0 else abs(y))
    report("3 route equivalence (10x10x3)", worst <= 1e-12, f"max relative difference {worst:.2e}")


def test_4_mirror_limit():
    kd = 1e4
    worst, slowest = 0.0, 0.0
    for kb in (0.5, 1.0, 2.0, 5.0, 10.0, 20.0):
        t0 = time.perf_counter()
        perp, par = plates_rates(1.0, PlateGeometry(kd, kb))
        slowest = max(slowest, time.perf_counter() - t0)
        mperp, mpar = mirror_rates(2 * kb)
        worst = max(worst, rel(perp, mperp), rel(par, mpar))
    ok = worst <= 1e-3 and slowest < 1.0
    report("4 mirror limit at kd=1e4", ok, f"max relative error {worst:.2e}, slowest evaluation {slowest:.3f} s")


def test_5_free_space_null():
    worst, kzero = 0.0, True
    for w1, w2 in ((1.0, 1.0), (0.3, 2.7), (5.0, 4.0)):
        atom = AtomicDoublet(w1, w2, 1.3)
        c = from_vacuum(FreeSpace(), atom)
        kzero &= c.kappa1 == 0 and c.kappa2 == 0
        worst = max(worst, rel(c.gamma1, c.gamma0_1), rel(c.gamma2, c.gamma0_2))
    report("5 free-space null", kzero and worst <= 1e-14,
           f"kappa exactly 0: {kzero}, max|gamma/gamma0-1|={worst:.2e}")


def _system(w1, w2, g1, g2, k1=0.0, k2=0.0):
    return VSystem(w1, w2, DecayCoefficients(g1, g2, k1, k2))


def test_6a_trace_and_hermiticity(rng):
    g = 1.0
    sys = _system(1.0, 1.3, g, 0.7 * g, 0.5 + 0.2j, 0.4 - 0.3j)
    traj = evolve(sys, random_density_matrix(rng), 10 / g, 1e-3 / g)
    trace = max(abs(np.trace(s) - 1) for s in traj.states)
    herm = max(np.max(np.abs(s - s.conj().T)) for s in traj.states)
    report("6a trace/Hermiticity drift", trace < 1e-10 and herm < 1e-10,
           f"trace drift {trace:.2e}, Hermiticity drift {herm:.2e} over {len(traj.times) - 1} steps")


def test_6b_pure_decay():
    g = 0.8
    traj = evolve(_system(1.0, 1.2, g, 0.5), ket_projector([1, 0, 0]), 10 / g, 1e-3 / g)
    err = float(np.max(np.abs(observables(traj)["rho11"] - np.exp(-2 * g * traj.times))))
    report("6b kappa=0 exponential decay", err <= 1e-8, f"max|rho11 - exp(-2 gamma t)|={err:.2e}")


def test_6c_dark_state():
    g = 1.0
    traj = evolve(_system(2.0, 2.0, g, g, g, g), ket_projector([1, 1, 0]), 10 / g, 1e-3 / g)
    err = float(np.max(np.abs(observables(traj)["excited"] - 1.0)))
    report("6c degenerate |kappa|=gamma dark state", err <= 1e-8, f"max excited-population change {err:.2e}")


def test_6d_convergence_order():
    sys = _system(1.0, 1.3, 0.4, 0.6, 0.3, 0.25 + 0.1j)
    rho0 = ket_projector([1, 0.5j, 0.2])

    def final(h):
        return evolve(sys, rho0, 4.0, h).states[-1]

    ref = final(0.002)
    e1 = np.max(np.abs(final(0.032) - ref))
    e2 = np.max(np.abs(final(0.016) - ref))
    order = math.log2(e1 / e2)
    report("6d RK4 convergence order", 3.7 <= order <= 4.3, f"measured order {order:.3f}")


def test_6e_spectral_stability(rng):
    worst = -math.inf
    for _ in range(50):
        g1, g2 = rng.uniform(0.1, 2.0, size=2)
        bound = math.sqrt(g1 * g2)
        k1, k2 = (bound * rng.uniform() * np.exp(2j * PI * rng.uniform()) for _ in range(2))
        sys = _system(*rng.uniform(-3, 3, size=2), g1, g2, k1, k2)
        worst = max(worst, float(np.max(np.linalg.eigvals(liouvillian(sys)).real)) / sys.rate_scale)
    report("6e Liouvillian spectra (50 sets)", worst <= 1e-10, f"max Re(eig)/rate_scale = {worst:.2e}")


def _tp(channels, omega_l, omega_fg=0.0):
    return TwoPhotonConfig([Channel(*c) for c in channels], omega_fg, omega_l)


def test_7a_isotropic_orthogonal_no_cross_terms():
    terms = channel_decomposition(_tp([(2.0, 1.0, X), (3.0, 0.6 + 0.2j, Z)], 1.0), FreeSpace())
    assert terms.shape == (2, 2)
    ok = terms[0, 1] == 0 and terms[1, 0] == 0
    report("7a isotropic + orthogonal dipoles", ok, f"cross terms {complex(terms[0, 1])}, {complex(terms[1, 0])}")


def test_7b_below_cutoff_maximal_interference():
    vac = Plates(PlateGeometry(1.0, 0.35))  # emitted k = 1.5 < pi / d
    terms = channel_decomposition(_tp([(2.0, 1.0, E_MINUS), (3.0, 0.8, E_PLUS)], 1.5), vac)
    assert abs(np.vdot(E_MINUS, E_PLUS)) < 1e-15
    err = rel(abs(terms[0, 1]), math.sqrt(terms[0, 0].real * terms[1, 1].real))
    report("7b below-cutoff plates + orthogonal circular dipoles", err <= 1e-12,
           f"| |T12|/sqrt(T11 T22) - 1 | = {err:.2e}")


def _random_channels(rng, n):
    return [(rng.uniform(1.5, 4.0), complex(*rng.normal(size=2)), rng.normal(size=3) + 1j * rng.normal(size=3))
            for _ in range(n)]


def test_7c_nonnegative(rng):
    lowest, near_zero = math.inf, 0
    for n in range(1000):
        cfg = _tp(_random_channels(rng, int(rng.integers(1, 5))), 1.0)
        if n % 5 == 0:
            # adversarial: a rank-2 tensor annihilating the amplitude vector, T ~ rounding
            v = amplitude_vector(cfg)
            m = np.eye(3) - np.outer(v, v.conj()) / np.vdot(v, v).real
        else:
            m = random_psd(rng, rank=int(rng.integers(1, 4)))
        t = transition_probability(cfg, Constant(m))
        near_zero += t < 1e-12
        lowest = min(lowest, t)
    report("7c T >= 0 on 1000 random PSD sets", lowest >= 0.0,
           f"min T = {lowest:.3e} ({near_zero} cases at rounding level)")


def test_7d_double_sum_vs_quadratic_form(rng):
    worst = 0.0
    for _ in range(200):
        m = random_psd(rng)
        chans = _random_channels(rng, 3)
        quad = transition_probability(_tp(chans, 1.0), Constant(m))
        dbl = two_photon_double_sum(chans, 1.0, m)
        worst = max(worst, abs(quad - dbl) / abs(dbl))
    report("7d double sum vs quadratic form", worst <= 1e-12, f"max relative difference {worst:.2e}")


@pytest.mark.parametrize("g2, expected", [(1.0, 1.5), (2.0, 4.0 / 3.0)])
def test_8_destructive_interference_zero(g2, expected):
    cfg = _tp([(1.0, 1.0, Z), (2.0, g2, Z)], 1.5)
    w = find_zero(cfg, FreeSpace(), (1.0, 2.0))
    ok = w is not None and abs(w - expected) <= 1e-9
    report(f"8 zero with g2={g2:g}", ok, f"found {w!r}, expected {expected!r}")


def test_9_cli_determinism(tmp_path):
    texts = []
    for run_id, workers in (("a", 1), ("b", 1), ("c", 3)):
        out = tmp_path / run_id
        code = main(["sweep", "--config", str(CONFIGS / "sweep_cutoff.toml"), "--out", str(out),
                     "--workers", str(workers), "--format", "csv"])
        assert code == 0
        (path,) = out.glob("sweep-*/data.csv")
        texts.append(data_section(path.read_text()).encode())
    serial_same = texts[0] == texts[1]
    parallel_same = texts[0] == texts[2]
    report("9 CLI determinism", serial_same and parallel_same,
           f"serial byte-identical: {serial_same}, parallel == serial: {parallel_same}, {len(texts[0])} bytes")
