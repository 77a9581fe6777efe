"""Tests of the lattice-shape energy layer: reduction, routes, scan, probe.

Frozen reference values were produced by independent summations (direct
lattice sums, the pentagonal eta series) in a separate scratch session and
are asserted as literals here; closed-form identities are used where exact.
"""

import math

import numpy as np
import pytest

from abrikosov.errors import InputError, NonPositiveImaginaryPart, NonPositiveParameter
from abrikosov.lattice import (
    EnergyReport,
    ModuliGrid,
    ScanReport,
    lattice_to_tau,
    moduli_scan,
    reduce_fundamental,
    shape_basis,
    theta_minimality_probe,
    w_eta,
    w_fourier,
    w_zeta_diff,
)
from abrikosov.modular import LatticeBasis, SeriesControl

SQRT3 = math.sqrt(3.0)
TRI_TAU = complex(0.5, 0.5 * SQRT3)
W_SQUARE = -0.19579719635341825   # frozen: w at tau = i, unit density
W_TRI = -0.20108944761168238      # frozen: w at the hexagonal point
W_DIFF = 0.00529225125826413      # frozen: W_SQUARE - W_TRI


# ---------------------------------------------------------------------------
# Fundamental-domain reduction
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "tau,expected",
    [
        (complex(1.5, 0.5), 1j),
        (complex(1.7, 0.4), complex(0.2, 1.6)),
        (complex(-2.3, 0.11), complex(-0.06170421155729544, 1.0773751224289922)),
        (complex(0.49, 3.0), complex(0.49, 3.0)),   # already reduced
        (TRI_TAU, TRI_TAU),
    ],
)
def test_reduce_fundamental_examples(tau, expected):
    got = reduce_fundamental(tau)
    assert abs(got - expected) < 1e-12


def test_reduce_fundamental_boundary_canonicalization():
    # the two half-lines a = -1/2 and a = +1/2 carry the same shapes: the
    # right representative is canonical
    got = reduce_fundamental(complex(-0.5, 1.2))
    assert abs(got - complex(0.5, 1.2)) < 1e-12
    # the left unit-circle arc maps to the right arc under tau -> -1/tau
    left = complex(-0.3, math.sqrt(1.0 - 0.09))
    got = reduce_fundamental(left)
    assert abs(got - complex(0.3, math.sqrt(1.0 - 0.09))) < 1e-12


def test_reduce_fundamental_invariance_of_energy():
    # reduction is exact on the energy, not just approximate
    for tau in (complex(3.7, 0.21), complex(-1.45, 0.33)):
        red = reduce_fundamental(tau)
        assert abs(red.real) <= 0.5 + 1e-12 and abs(red) >= 1.0 - 1e-12
        assert abs(w_eta(tau).value - w_eta(red).value) < 1e-12


def test_reduce_rejects_lower_half_plane():
    with pytest.raises(NonPositiveImaginaryPart):
        reduce_fundamental(complex(0.3, -1.0))
    with pytest.raises(NonPositiveImaginaryPart):
        reduce_fundamental(complex(0.3, 0.0))


def test_lattice_to_tau_round_trip():
    for tau in (1j, TRI_TAU, complex(0.21, 1.44)):
        basis = shape_basis(tau)
        assert abs(basis.covolume - 2.0 * math.pi) < 1e-12
        back, scale = lattice_to_tau(basis)
        assert abs(back - tau) < 1e-12
        assert abs(scale - 1.0) < 1e-12
    # rotation and scaling leave the shape invariant
    basis = shape_basis(TRI_TAU)
    ang = 0.7
    rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
    turned = LatticeBasis(3.0 * rot @ basis.u, 3.0 * rot @ basis.v)
    back, scale = lattice_to_tau(turned)
    assert abs(back - TRI_TAU) < 1e-12
    assert abs(scale - 3.0) < 1e-12


# ---------------------------------------------------------------------------
# The three energy routes
# ---------------------------------------------------------------------------


def test_w_eta_frozen_values():
    assert abs(w_eta(1j).value - W_SQUARE) < 1e-14
    assert abs(w_eta(TRI_TAU).value - W_TRI) < 1e-14
    assert w_eta(1j).route == "eta"
    assert w_eta(1j).value > w_eta(TRI_TAU).value  # hexagonal is lower


def test_w_eta_density_scaling_identity():
    # w(tau, m) = m (w(tau, 1) - (1/4) log m)
    for tau in (1j, TRI_TAU, complex(0.3, 1.2)):
        base = w_eta(tau).value
        for m in (0.5, 2.0, 7.3):
            expected = m * (base - 0.25 * math.log(m))
            assert abs(w_eta(tau, m).value - expected) < 1e-12


def test_w_eta_rejects_bad_inputs():
    with pytest.raises(NonPositiveImaginaryPart):
        w_eta(complex(0.5, -1.0))
    with pytest.raises(NonPositiveParameter):
        w_eta(1j, m=0.0)


def test_w_fourier_agrees_with_eta():
    for tau in (1j, TRI_TAU, complex(0.2, 1.1)):
        eta_val = w_eta(tau).value
        rep = w_fourier(tau)
        assert rep.route == "fourier"
        assert abs(rep.value - eta_val) < 1e-6
        assert abs(rep.value - eta_val) < 10.0 * max(rep.error_estimate, 1e-9)


def test_w_fourier_density_and_direction_invariance():
    rep = w_fourier(TRI_TAU, m=3.0)
    expected = 3.0 * (w_eta(TRI_TAU).value - 0.25 * math.log(3.0))
    assert abs(rep.value - expected) < 1e-5
    a = w_fourier(1j, direction=0.0).value
    b = w_fourier(1j, direction=0.9).value
    assert abs(a - b) < 1e-6


def test_w_fourier_probe_validation():
    with pytest.raises(InputError):
        w_fourier(1j, probe_radii=())
    with pytest.raises(NonPositiveParameter):
        w_fourier(1j, probe_radii=(1e-2, -1e-3))
    with pytest.raises(InputError):
        w_fourier(1j, probe_radii=(1e-3, 1e-2))  # must decrease
    with pytest.raises(InputError):
        w_fourier(1j, probe_radii=(1e-2, 1e-2))  # strictly


def test_w_zeta_diff_square_vs_triangular():
    got = w_zeta_diff(1j, TRI_TAU)
    assert abs(got - W_DIFF) < 1e-10
    assert abs(w_zeta_diff(TRI_TAU, 1j) + got) < 1e-10
    # density factor multiplies through the difference
    scaled = w_zeta_diff(1j, TRI_TAU, m=2.0)
    assert abs(scaled - 2.0 * got) < 1e-9


# ---------------------------------------------------------------------------
# Moduli grid and scan
# ---------------------------------------------------------------------------


def test_moduli_grid_validation():
    with pytest.raises(InputError):
        ModuliGrid(a_range=(-0.7, 0.5))            # outside |a| <= 1/2
    with pytest.raises(InputError):
        ModuliGrid(resolution=0)
    with pytest.raises(InputError):
        ModuliGrid(a_range=(0.4, 0.2))             # unordered
    with pytest.raises(NonPositiveImaginaryPart):
        ModuliGrid(b_range=(-0.1, 1.5))
    with pytest.raises(InputError):
        ModuliGrid(a_range=(0.0, 0.2), b_range=(0.3, 0.5))  # below the arc
    ModuliGrid(resolution=1)                        # minimal grid is legal


def test_moduli_grid_points_respect_domain():
    grid = ModuliGrid(resolution=40)
    a, b = grid.points()
    assert a.size == b.size and a.size > 0
    assert np.all(a * a + b * b >= 1.0 - 1e-9)
    assert np.all(np.abs(a) <= 0.5 + 1e-12)
    # arc ordinates are included exactly where they fall in the window
    on_arc = np.abs(a * a + b * b - 1.0) < 1e-9
    assert np.any(on_arc)


def test_moduli_scan_finds_hexagonal_point():
    grid = ModuliGrid(resolution=60)
    rep = moduli_scan(grid, refine_iters=40)
    assert isinstance(rep, ScanReport)
    a_star, b_star = rep.argmin
    assert abs(a_star - 0.5) < 0.05
    assert abs(b_star - 0.5 * SQRT3) < 0.05
    assert abs(rep.min_value - W_TRI) < 1e-4
    assert rep.min_value <= rep.min_grid + 1e-15


def test_moduli_scan_csv_shape():
    grid = ModuliGrid(resolution=8)
    rep = moduli_scan(grid, refine_iters=5)
    lines = rep.to_csv().strip().split("\n")
    assert lines[0] == "a,b,W"
    assert len(lines) == 1 + rep.a.size
    first = lines[1].split(",")
    assert len(first) == 3
    float(first[0]), float(first[1]), float(first[2])


def test_moduli_scan_deterministic():
    grid = ModuliGrid(resolution=24)
    r1 = moduli_scan(grid, refine_iters=10)
    r2 = moduli_scan(grid, refine_iters=10)
    assert r1.argmin == r2.argmin
    assert r1.min_value == r2.min_value
    assert np.array_equal(r1.w, r2.w)


# ---------------------------------------------------------------------------
# Theta minimality probe
# ---------------------------------------------------------------------------


def test_theta_probe_no_violations_small():
    rep = theta_minimality_probe([0.5, 2.0], samples=12, seed=3)
    assert rep.n_violations == 0
    assert rep.comparisons == 2 * 12
    assert rep.min_margin > 0.0


def test_theta_probe_deterministic():
    r1 = theta_minimality_probe([1.0], samples=6, seed=11)
    r2 = theta_minimality_probe([1.0], samples=6, seed=11)
    assert r1.to_json_dict() == r2.to_json_dict()
    r3 = theta_minimality_probe([1.0], samples=6, seed=12)
    assert r3.min_margin != r1.min_margin


def test_theta_probe_flags_the_hexagonal_point_itself():
    # feeding the minimizer back in gives a zero margin, counted as
    # inconclusive (below the noise floor) rather than a violation
    rep = theta_minimality_probe([1.0], samples=2, seed=0, extra_taus=[TRI_TAU])
    assert rep.n_violations == 0
    assert rep.inconclusive >= 1


def test_energy_report_round_trip():
    rep = w_eta(1j, m=2.0, ctl=SeriesControl(abs_tol=1e-10))
    d = rep.to_dict()
    assert d["route"] == "eta"
    assert d["truncation"]["abs_tol"] == 1e-10
    with pytest.raises(NonPositiveParameter):
        EnergyReport(value=0.0, route="eta", truncation=SeriesControl(),
                     error_estimate=-1.0)
