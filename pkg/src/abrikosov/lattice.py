"""Per-shape Coulomb energy of planar lattices and its minimization.

The energy of a unit-density lattice of shape ``tau = a + i b`` is

    w(tau) = -1/2 * log( sqrt(2 pi b) |eta(tau)|^2 ),

extended to density ``m`` by ``w_m = m (w_1 - 1/4 log m)``.  Three
independent evaluation routes are provided (eta product, regularized
Fourier sum extrapolated to the origin, and theta-integral differences);
they agree to well below 1e-6 and are cross-checked in the test suite.

``moduli_scan`` verifies that the minimum over shapes is the hexagonal
point ``tau = 1/2 + i sqrt(3)/2`` on a fundamental-domain grid.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CovolumeMismatch,
    ExtrapolationUnstable,
    InputError,
    NonPositiveImaginaryPart,
    NonPositiveParameter,
)
from .modular import (
    LatticeBasis,
    LatticeModulus,
    SeriesControl,
    _nterms_for,
    _require_upper,
    dedekind_eta,
    eta_truncation,
    kronecker_f,
    theta_lattice,
    zeta_difference_limit,
)

__all__ = [
    "EnergyReport",
    "ModuliGrid",
    "ScanReport",
    "ThetaProbeReport",
    "reduce_fundamental",
    "lattice_to_tau",
    "shape_basis",
    "w_eta",
    "w_fourier",
    "w_zeta_diff",
    "moduli_scan",
    "theta_minimality_probe",
]

TWO_PI = 2.0 * math.pi
TRIANGULAR_TAU = complex(0.5, math.sqrt(3.0) / 2.0)
DEFAULT_PROBES = (1e-2, 5e-3, 2.5e-3)
_DEFAULT_CTL = SeriesControl()


@dataclass(frozen=True)
class EnergyReport:
    """An energy value plus the route and truncation data that produced it."""

    value: float
    route: str  # one of "eta", "fourier", "zetadiff"
    truncation: SeriesControl
    error_estimate: float

    def __post_init__(self):
        if self.error_estimate < 0.0:
            raise NonPositiveParameter("error_estimate must be >= 0")

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "route": self.route,
            "error_estimate": self.error_estimate,
            "truncation": {
                "truncation_order": self.truncation.truncation_order,
                "abs_tol": self.truncation.abs_tol,
                "max_terms": self.truncation.max_terms,
            },
        }


# ---------------------------------------------------------------------------
# Fundamental-domain reduction
# ---------------------------------------------------------------------------


def _reduce_with_matrix(tau: complex):
    """Reduce tau into {|Re| <= 1/2, |tau| >= 1} tracking the group word.

    Returns (tau', M) with M = [[alpha, beta], [gamma, delta]] integer,
    det M = 1, and tau' = (alpha tau + beta) / (gamma tau + delta).
    """
    tau = _require_upper(tau)
    m = np.eye(2, dtype=np.int64)
    for _ in range(10_000):
        k = int(np.floor(tau.real + 0.5))
        if k != 0:
            tau = tau - k
            m = np.array([[1, -k], [0, 1]], dtype=np.int64) @ m
        norm = tau.real * tau.real + tau.imag * tau.imag
        if norm < 1.0 - 1e-15:
            tau = complex(-tau.real / norm, tau.imag / norm)
            m = np.array([[0, -1], [1, 0]], dtype=np.int64) @ m
            continue
        break
    # canonical representative on the boundary identifications
    if abs(tau.real + 0.5) < 1e-14:
        tau = complex(0.5, tau.imag)
        m = np.array([[1, 1], [0, 1]], dtype=np.int64) @ m
    norm = tau.real * tau.real + tau.imag * tau.imag
    if abs(norm - 1.0) < 1e-14 and tau.real < -1e-14:
        tau = complex(-tau.real / norm, tau.imag / norm)
        m = np.array([[0, -1], [1, 0]], dtype=np.int64) @ m
        if abs(tau.real + 0.5) < 1e-14:
            tau = complex(0.5, tau.imag)
            m = np.array([[1, 1], [0, 1]], dtype=np.int64) @ m
    return tau, m


def reduce_fundamental(tau: complex) -> complex:
    """Canonical representative of tau in {|Re| <= 1/2, |tau| >= 1}.

    Boundary points are canonicalized toward nonnegative real part
    (Re = -1/2 maps to +1/2; the left unit-arc half maps to the right).
    """
    return _reduce_with_matrix(tau)[0]


def lattice_to_tau(basis: LatticeBasis):
    """Shape modulus and scale factor of a lattice given by a basis.

    Returns (tau, scale): ``tau`` is the reduced modulus of the lattice's
    shape (which coincides with its dual's shape: in the plane the dual is
    the same lattice rotated by 90 degrees and rescaled), and ``scale`` is
    the linear factor relating the input to the covolume-2pi normalization,
    scale = sqrt(covolume / (2 pi)).  The unit-density modulus therefore has
    m = 1/scale^2.
    """
    u = complex(basis.u[0], basis.u[1])
    v = complex(basis.v[0], basis.v[1])
    tau = reduce_fundamental(v / u)
    scale = math.sqrt(basis.covolume / TWO_PI)
    return tau, scale


def shape_basis(tau: complex, covolume: float = TWO_PI) -> LatticeBasis:
    """A concrete basis realizing shape tau at the requested covolume."""
    tau = _require_upper(tau)
    if not (covolume > 0.0):
        raise NonPositiveParameter("covolume must be > 0")
    c = math.sqrt(covolume / tau.imag)
    return LatticeBasis((c, 0.0), (c * tau.real, c * tau.imag))


# ---------------------------------------------------------------------------
# The three energy routes
# ---------------------------------------------------------------------------


def _w_eta_value(tau: complex, ctl: SeriesControl) -> float:
    tau = reduce_fundamental(tau)
    eta = dedekind_eta(tau, ctl)
    return -0.5 * math.log(math.sqrt(TWO_PI * tau.imag) * abs(eta) ** 2)


def _density_scale(value_unit: float, m: float) -> float:
    if not (m > 0.0):
        raise NonPositiveParameter("density m must be > 0")
    return m * (value_unit - 0.25 * math.log(m))


def w_eta(tau: complex, m: float = 1.0,
          ctl: SeriesControl = _DEFAULT_CTL) -> EnergyReport:
    """Energy of the shape-tau lattice at density m, eta-product route."""
    tau_r = reduce_fundamental(tau)
    value = _density_scale(_w_eta_value(tau_r, ctl), m)
    _, log_tail = eta_truncation(tau_r, ctl)
    return EnergyReport(value=value, route="eta", truncation=ctl,
                        error_estimate=m * log_tail)


def _h_reg(s: float, t: float, tau: complex, ctl: SeriesControl) -> float:
    """Regularized potential H(x) at fractional coordinates (s, t).

    H is the mean-zero solution of -Delta H = 2 pi delta_0 - 1 on the
    covolume-2pi torus of shape tau; closed form -log|f(s + t tau, tau)|
    + pi b t^2 (with (s,t) wrapped to [-1/2, 1/2]).
    """
    sw = s - round(s)
    tw = t - round(t)
    z = complex(sw + tw * tau.real, tw * tau.imag)
    return -math.log(kronecker_f(z, tau, ctl)) + math.pi * tau.imag * tw * tw


def w_fourier(tau: complex, m: float = 1.0,
              probe_radii=DEFAULT_PROBES,
              ctl: SeriesControl = _DEFAULT_CTL,
              direction: float = 0.0) -> EnergyReport:
    """Energy via the regularized Fourier sum extrapolated to the origin.

    At each probe radius r the regularized potential H(x) is evaluated at
    x = r (cos dir, sin dir) through its q-series closed form, and
    w(r) = (H(x) + log r) / 2 is extrapolated to r -> 0.  The remainder
    w(r) - w(0) is even in x, so the extrapolation is Richardson in r^2
    (Neville tableau at 0).
    """
    probes = [float(r) for r in probe_radii]
    if len(probes) < 1:
        raise InputError("probe_radii must be nonempty")
    if any(r <= 0.0 for r in probes):
        raise NonPositiveParameter("probe radii must be > 0")
    if any(b >= a for a, b in zip(probes, probes[1:])):
        raise InputError("probe_radii must be strictly decreasing")

    tau_r = reduce_fundamental(tau)
    a, b = tau_r.real, tau_r.imag
    c = math.sqrt(TWO_PI / b)  # cell scale of the covolume-2pi realization
    cos_d, sin_d = math.cos(direction), math.sin(direction)

    # Basis realization u1 = c(1,0), u2 = c(a,b); fractional coordinates of
    # x = r(cos,sin):  t = x2/(cb), s = x1/c - a t.
    w_vals = []
    for r in probes:
        x1, x2 = r * cos_d, r * sin_d
        t = x2 / (c * b)
        s = x1 / c - a * t
        h = _h_reg(s, t, tau_r, ctl)
        w_vals.append(0.5 * (h + math.log(r)))

    # Neville extrapolation to 0 in the variable r^2.
    nodes = [r * r for r in probes]
    tab = list(w_vals)
    prev_corr = None
    corr = 0.0
    for level in range(1, len(tab)):
        for i in range(len(tab) - 1, level - 1, -1):
            tab[i] = tab[i] + nodes[i] * (tab[i] - tab[i - 1]) \
                / (nodes[i - level] - nodes[i])
        corr = abs(tab[-1] - tab[-2]) if len(tab) > 1 else 0.0
        if prev_corr is not None and corr > 4.0 * prev_corr \
                and corr > 100.0 * ctl.abs_tol:
            raise ExtrapolationUnstable(
                f"Richardson corrections grew: {prev_corr} -> {corr}"
            )
        prev_corr = corr
    value_unit = tab[-1]
    err = corr if len(probes) > 1 else abs(probes[0]) ** 2
    return EnergyReport(value=_density_scale(value_unit, m), route="fourier",
                        truncation=ctl, error_estimate=m * max(err, ctl.abs_tol))


def w_zeta_diff(tau1: complex, tau2: complex, m: float = 1.0,
                ctl: SeriesControl = _DEFAULT_CTL) -> float:
    """w(tau1, m) - w(tau2, m) through the theta-integral difference route.

    Both shapes are realized at covolume 2 pi; the limit of the difference
    of their dual zeta functions equals the energy difference directly, and
    the density factor multiplies through (the -1/4 log m terms cancel).
    """
    if not (m > 0.0):
        raise NonPositiveParameter("density m must be > 0")
    b1 = shape_basis(reduce_fundamental(tau1))
    b2 = shape_basis(reduce_fundamental(tau2))
    return m * zeta_difference_limit(b1, b2, ctl)


# ---------------------------------------------------------------------------
# Moduli scan (shape optimization over the fundamental domain)
# ---------------------------------------------------------------------------


def _arc_b(a: float) -> float:
    """Imaginary part of the unit-circle boundary of the fundamental domain."""
    return math.sqrt(max(1.0 - a * a, 0.0))


@dataclass(frozen=True)
class ModuliGrid:
    """Rectangular sample window, clipped to the fundamental-domain closure.

    The scanned points are the grid points of the a x b rectangle that
    satisfy a^2 + b^2 >= 1, augmented with the boundary-arc points
    (a, sqrt(1 - a^2)) of every column whose arc ordinate falls inside
    b_range, so minima on the arc are representable exactly.
    """

    a_range: tuple = (-0.5, 0.5)
    b_range: tuple = (0.8, 1.6)
    resolution: int = 200

    def __post_init__(self):
        a_min, a_max = self.a_range
        b_min, b_max = self.b_range
        if self.resolution < 1:
            raise InputError("resolution must be >= 1")
        if not (a_min <= a_max) or not (b_min <= b_max):
            raise InputError("ranges must be ordered (min <= max)")
        if a_min < -0.5 - 1e-12 or a_max > 0.5 + 1e-12:
            raise InputError("a_range must lie inside [-1/2, 1/2]")
        if b_min <= 0.0:
            raise NonPositiveImaginaryPart("b_range must be positive")
        if b_max < _arc_b(max(abs(a_min), abs(a_max))) - 1e-12:
            raise InputError("grid rectangle lies entirely below |tau| = 1")

    def points(self):
        """(a, b) arrays of all scanned sample points, deterministic order."""
        a_min, a_max = self.a_range
        b_min, b_max = self.b_range
        n = self.resolution
        a_vals = np.linspace(a_min, a_max, n)
        b_vals = np.linspace(b_min, b_max, n)
        aa, bb = np.meshgrid(a_vals, b_vals, indexing="ij")
        keep = aa * aa + bb * bb >= 1.0 - 1e-12
        pts_a = [aa[keep]]
        pts_b = [bb[keep]]
        arc = np.sqrt(np.maximum(1.0 - a_vals * a_vals, 0.0))
        on = (arc >= b_min - 1e-12) & (arc <= b_max + 1e-12)
        pts_a.append(a_vals[on])
        pts_b.append(arc[on])
        return np.concatenate(pts_a), np.concatenate(pts_b)


@dataclass
class ScanReport:
    """Result of a moduli scan: raw grid data plus the refined minimizer."""

    m: float
    resolution: int
    a: np.ndarray
    b: np.ndarray
    w: np.ndarray
    argmin_grid: tuple        # (a, b) of the best grid sample, canonicalized
    min_grid: float
    argmin: tuple             # after local descent refinement
    min_value: float
    refine_iters: int

    def to_json_dict(self) -> dict:
        return {
            "m": self.m,
            "resolution": self.resolution,
            "n_points": int(self.a.size),
            "argmin_grid": {"a": self.argmin_grid[0], "b": self.argmin_grid[1]},
            "min_grid": self.min_grid,
            "argmin": {"a": self.argmin[0], "b": self.argmin[1]},
            "min": self.min_value,
            "refine_iters": self.refine_iters,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("a,b,W\n")
        for ai, bi, wi in zip(self.a, self.b, self.w):
            buf.write(f"{ai:.9g},{bi:.9g},{wi:.9g}\n")
        return buf.getvalue()


def _w_eta_array(a: np.ndarray, b: np.ndarray, m: float,
                 ctl: SeriesControl) -> np.ndarray:
    """Vectorized unit-density eta-route energy on fundamental-domain points.

    Identical recurrence to dedekind_eta, evaluated on arrays; valid for
    points at or above the fundamental-domain arc (b >= sqrt(3)/2 - eps),
    where a uniform term count suffices.
    """
    b_min = float(np.min(b))
    n = _nterms_for(b_min, ctl)
    q = np.exp(2j * np.pi * (a + 1j * b))
    prod = np.ones_like(q)
    qn = np.ones_like(q)
    for _ in range(n):
        qn = qn * q
        prod = prod * (1.0 - qn)
    abs_eta2 = np.exp(-2.0 * np.pi * b / 12.0) * np.abs(prod) ** 2
    w1 = -0.5 * np.log(np.sqrt(TWO_PI * b) * abs_eta2)
    return m * (w1 - 0.25 * math.log(m))


def moduli_scan(grid: ModuliGrid, m: float = 1.0,
                ctl: SeriesControl = _DEFAULT_CTL,
                refine_iters: int = 60) -> ScanReport:
    """Scan w over the grid and refine the best sample by local descent.

    The grid argmin (deterministic lexicographic tie-break on (a, b)) is
    canonicalized through the fundamental-domain reduction, then refined by
    a five-point-stencil gradient descent with backtracking; the energy is
    modular-invariant, so stencil legs may leave the domain freely and the
    final point is reduced back.
    """
    if not (m > 0.0):
        raise NonPositiveParameter("density m must be > 0")
    a, b = grid.points()
    w = _w_eta_array(a, b, m, ctl)
    order = np.lexsort((b, a, w))  # w is the primary key
    best = order[0]
    tau0 = reduce_fundamental(complex(float(a[best]), float(b[best])))
    argmin_grid = (tau0.real, tau0.imag)
    min_grid = float(w[best])

    # local refinement (descent on the smooth modular-invariant energy)
    span_a = max(grid.a_range[1] - grid.a_range[0], 1e-3)
    cell = span_a / max(grid.resolution - 1, 1)
    delta = cell / 8.0
    p = np.array([tau0.real, tau0.imag])
    fval = _density_scale(_w_eta_value(complex(*p), ctl), m)
    iters_done = 0
    step = cell
    for _ in range(refine_iters):
        ga = (_density_scale(_w_eta_value(complex(p[0] + delta, p[1]), ctl), m)
              - _density_scale(_w_eta_value(complex(p[0] - delta, p[1]), ctl), m)) \
            / (2.0 * delta)
        gb = (_density_scale(_w_eta_value(complex(p[0], p[1] + delta), ctl), m)
              - _density_scale(_w_eta_value(complex(p[0], p[1] - delta), ctl), m)) \
            / (2.0 * delta)
        g = np.array([ga, gb])
        gn = float(np.hypot(ga, gb))
        if gn < 1e-12:
            break
        s = step
        moved = False
        for _ in range(30):
            cand = p - s * g
            if cand[1] > 0.05:
                fc = _density_scale(_w_eta_value(complex(*cand), ctl), m)
                if fc < fval - 1e-4 * s * gn * gn:
                    p, fval, moved = cand, fc, True
                    step = min(s * 1.5, cell)
                    break
            s *= 0.5
        iters_done += 1
        if not moved:
            break
    tau_fin = reduce_fundamental(complex(*p))
    return ScanReport(m=m, resolution=grid.resolution, a=a, b=b, w=w,
                      argmin_grid=argmin_grid, min_grid=min_grid,
                      argmin=(tau_fin.real, tau_fin.imag),
                      min_value=min(fval, min_grid),
                      refine_iters=iters_done)


# ---------------------------------------------------------------------------
# Theta minimality probe
# ---------------------------------------------------------------------------


@dataclass
class ThetaProbeReport:
    """Outcome of comparing hexagonal theta against random shapes."""

    alphas: list
    samples: int
    seed: int
    noise_floor: float
    violations: list = field(default_factory=list)   # (alpha, a, b, margin)
    inconclusive: int = 0
    comparisons: int = 0
    min_margin: float = math.inf  # min over conclusive samples of theta - theta_tri

    @property
    def n_violations(self) -> int:
        return len(self.violations)

    def to_json_dict(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "samples": self.samples,
            "seed": self.seed,
            "comparisons": self.comparisons,
            "violations": [
                {"alpha": v[0], "a": v[1], "b": v[2], "margin": v[3]}
                for v in self.violations
            ],
            "inconclusive": self.inconclusive,
            "min_margin": None if math.isinf(self.min_margin) else self.min_margin,
        }


def _unimodular_basis(tau: complex) -> LatticeBasis:
    return shape_basis(tau, covolume=1.0)


def theta_minimality_probe(alphas, samples: int, seed: int = 0,
                           ctl: SeriesControl = _DEFAULT_CTL,
                           extra_taus=()) -> ThetaProbeReport:
    """Check hexagonal minimality of theta among equal-covolume shapes.

    For each alpha, theta of the hexagonal (triangular-lattice) shape is
    compared against `samples` random fundamental-domain shapes, all
    realized at covolume 1.  A sample beats the hexagonal value by more
    than the noise floor -> recorded violation; differences below the
    floor are counted inconclusive (ties included).
    """
    alphas = [float(x) for x in alphas]
    if any(x <= 0.0 for x in alphas):
        raise NonPositiveParameter("alphas must be > 0")
    report = ThetaProbeReport(alphas=alphas, samples=int(samples), seed=seed,
                              noise_floor=1e-11)
    rng = np.random.default_rng(seed)
    taus = []
    for _ in range(int(samples)):
        av = rng.uniform(-0.5, 0.5)
        bv = _arc_b(av) * (1.0 + 1.5 * rng.random() ** 2)
        taus.append(complex(av, bv))
    taus.extend(complex(t) for t in extra_taus)
    tri = _unimodular_basis(TRIANGULAR_TAU)
    for alpha in alphas:
        theta_tri = theta_lattice(tri, alpha, ctl)
        floor = report.noise_floor * max(1.0, theta_tri)
        for t in taus:
            theta_s = theta_lattice(_unimodular_basis(t), alpha, ctl)
            margin = theta_s - theta_tri
            report.comparisons += 1
            if abs(margin) < floor:
                report.inconclusive += 1
                continue
            report.min_margin = min(report.min_margin, margin)
            if margin < 0.0:
                report.violations.append((alpha, t.real, t.imag, margin))
    return report
