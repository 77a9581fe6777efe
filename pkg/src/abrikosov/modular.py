"""q-series special functions and lattice theta/zeta machinery.

Conventions used throughout:

* ``tau = a + i b`` with ``b > 0`` is a lattice shape modulus; ``q =
  exp(2 i pi tau)``.
* A planar lattice is ``{i*u + j*v}`` for basis vectors ``u, v`` with positive
  cross product; its covolume is ``|cross(u, v)|``.
* ``theta(basis, alpha) = sum_p exp(-pi alpha |p|^2)`` over all lattice
  points including the origin.
* ``zeta(basis, x) = sum_{p != 0} 1 / (8 pi^2 |p|^(2+x))`` for ``x > 0``; the
  Mellin/theta route below continues it efficiently and, for differences of
  equal-covolume lattices, through the ``x -> 0`` limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CovolumeMismatch,
    DegenerateBasis,
    DivergentSeries,
    LatticePointSingularity,
    NonPositiveImaginaryPart,
    NonPositiveParameter,
    PrecisionUnreachable,
)

__all__ = [
    "SeriesControl",
    "LatticeModulus",
    "LatticeBasis",
    "dedekind_eta",
    "eta_truncation",
    "kronecker_f",
    "eisenstein",
    "theta_lattice",
    "theta_tail_bound",
    "epstein_zeta_mellin",
    "zeta_difference_limit",
]

DEFAULT_CONTROL_TOL = 1e-12
SINGULAR_TUBE = 1e-9


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for the q-series and lattice sums.

    ``abs_tol`` drives the automatic choice of series length (or enumeration
    radius).  ``truncation_order`` is a floor: at least that many q-series
    terms (or lattice shells) are always taken, so raising it can only
    refine a result.  ``max_terms`` caps the automatic choice; if ``abs_tol``
    would need more terms than that, :class:`PrecisionUnreachable` is raised.
    """

    truncation_order: int = 1
    abs_tol: float = DEFAULT_CONTROL_TOL
    max_terms: int = 512

    def __post_init__(self):
        if self.truncation_order < 1:
            raise NonPositiveParameter("truncation_order must be >= 1")
        if not (self.abs_tol > 0.0):
            raise NonPositiveParameter("abs_tol must be > 0")
        if self.max_terms < self.truncation_order:
            raise NonPositiveParameter("max_terms must be >= truncation_order")


_DEFAULT_CTL = SeriesControl()


@dataclass(frozen=True)
class LatticeModulus:
    """Shape modulus ``tau = a + i b`` plus a number density ``m``."""

    a: float
    b: float
    m: float = 1.0

    def __post_init__(self):
        if not (self.b > 0.0):
            raise NonPositiveImaginaryPart("modulus needs b > 0")
        if not (self.m > 0.0):
            raise NonPositiveParameter("density m must be > 0")

    @property
    def tau(self) -> complex:
        return complex(self.a, self.b)


class LatticeBasis:
    """Basis pair (u, v) of a planar lattice, orientation-normalized.

    The constructor flips the sign of ``v`` if needed so that
    ``cross(u, v) > 0`` (this does not change the lattice).
    """

    __slots__ = ("u", "v")

    def __init__(self, u, v):
        u = np.asarray(u, dtype=float).reshape(2).copy()
        v = np.asarray(v, dtype=float).reshape(2).copy()
        cross = u[0] * v[1] - u[1] * v[0]
        scale = np.linalg.norm(u) * np.linalg.norm(v)
        if scale == 0.0 or abs(cross) < 1e-12 * scale:
            raise DegenerateBasis("basis vectors are collinear or zero")
        if cross < 0.0:
            v = -v
        self.u = u
        self.v = v

    @property
    def covolume(self) -> float:
        return self.u[0] * self.v[1] - self.u[1] * self.v[0]

    @property
    def matrix(self) -> np.ndarray:
        """Basis matrix with u, v as columns."""
        return np.column_stack([self.u, self.v])

    def dual(self) -> "LatticeBasis":
        """Basis of the dual lattice (inverse-transpose columns)."""
        d = np.linalg.inv(self.matrix).T
        return LatticeBasis(d[:, 0], d[:, 1])

    def shortest_norm_sq(self) -> float:
        """Squared length of a shortest nonzero vector (small enumeration)."""
        rng = range(-3, 4)
        best = math.inf
        # a 7x7 window suffices after the 3-step Lagrange-style shrink below
        u, v = self.u.copy(), self.v.copy()
        for _ in range(32):
            # size-reduce v against u
            mu = float(np.dot(u, v) / np.dot(u, u))
            v = v - round(mu) * u
            if np.dot(v, v) < np.dot(u, u):
                u, v = v, u
            else:
                break
        for i in rng:
            for j in rng:
                if i == 0 and j == 0:
                    continue
                p = i * u + j * v
                best = min(best, float(np.dot(p, p)))
        return best

    def __repr__(self):
        return f"LatticeBasis(u={self.u.tolist()}, v={self.v.tolist()})"


def _require_upper(tau: complex) -> complex:
    tau = complex(tau)
    if not (tau.imag > 0.0):
        raise NonPositiveImaginaryPart(f"tau must satisfy Im tau > 0, got {tau}")
    return tau


def _nterms_for(b: float, ctl: SeriesControl, extra: float = 0.0) -> int:
    """Smallest n with exp(-2 pi b n + extra) below ctl.abs_tol / 10.

    ctl.truncation_order acts as a floor on the returned count.
    """
    need = (-math.log(ctl.abs_tol / 10.0) + extra) / (2.0 * math.pi * b)
    n = max(int(math.ceil(need)) + 2, 4)
    if n > ctl.max_terms:
        raise PrecisionUnreachable(
            f"need {n} series terms for abs_tol={ctl.abs_tol} at b={b}, "
            f"max_terms={ctl.max_terms}"
        )
    return max(n, ctl.truncation_order)


def eta_truncation(tau: complex, ctl: SeriesControl = _DEFAULT_CTL):
    """(term count, a-posteriori bound) for dedekind_eta at this tau.

    The bound is on |log eta_truncated - log eta|: the dropped factors are
    prod_{k>n}(1 - q^k), so |delta log| <= sum_{k>n} |q|^k / (1 - |q|)
    <= |q|^(n+1) / (1 - |q|)^2.
    """
    tau = _require_upper(tau)
    n = _nterms_for(tau.imag, ctl)
    qa = math.exp(-2.0 * math.pi * tau.imag)
    bound = qa ** (n + 1) / (1.0 - qa) ** 2
    return n, bound


def dedekind_eta(tau: complex, ctl: SeriesControl = _DEFAULT_CTL) -> complex:
    """q^(1/24) * prod_{n>=1} (1 - q^n) with q = exp(2 i pi tau)."""
    tau = _require_upper(tau)
    n = _nterms_for(tau.imag, ctl)
    q = np.exp(2j * np.pi * tau)
    prod = complex(1.0, 0.0)
    qn = complex(1.0, 0.0)
    for _ in range(n):
        qn *= q
        prod *= 1.0 - qn
    return complex(np.exp(2j * np.pi * tau / 24.0)) * prod


def _frac_wrap(x: float) -> float:
    """Wrap to [-1/2, 1/2] (round-half-even at the boundary)."""
    return float(x - np.rint(x))


def _z_lattice_distance(z: complex, tau: complex) -> float:
    """Distance from z to the lattice Z + tau Z in the z-plane."""
    v = z.imag / tau.imag
    u = z.real - v * tau.real
    w = _frac_wrap(u) + _frac_wrap(v) * tau
    return abs(w)


def kronecker_f(z: complex, tau: complex, ctl: SeriesControl = _DEFAULT_CTL) -> float:
    """Modulus of f(z, tau) = q^(1/12) (p^(1/2) - p^(-1/2)) prod (1-q^n p)(1-q^n/p).

    Only the absolute value is returned; the half-power prefactor is evaluated
    branch-free as ``|p^(1/2) - p^(-1/2)| = |2 sin(pi z)|``.
    """
    tau = _require_upper(tau)
    z = complex(z)
    dist = _z_lattice_distance(z, tau)
    if dist == 0.0:
        # exactly on the lattice: f vanishes and its modulus is well-defined
        return 0.0
    if dist < SINGULAR_TUBE:
        raise LatticePointSingularity(f"z={z} is within {SINGULAR_TUBE} of the lattice")
    b = tau.imag
    n = _nterms_for(b, ctl, extra=2.0 * math.pi * abs(z.imag))
    q = np.exp(2j * np.pi * tau)
    p = np.exp(2j * np.pi * z)
    val = math.exp(-2.0 * math.pi * b / 12.0) * abs(2.0 * np.sin(np.pi * z))
    qn = complex(1.0, 0.0)
    for _ in range(n):
        qn *= q
        val *= abs(1.0 - qn * p) * abs(1.0 - qn / p)
    return float(val)


def eisenstein(u: float, v: float, tau: complex,
               ctl: SeriesControl = _DEFAULT_CTL) -> float:
    """Character-twisted Eisenstein sum E_{u,v}(tau).

    Defined (by symmetric summation) as
    ``sum_{(m,n) != 0} exp(2 i pi (m u + n v)) * b / |m tau + n|^2`` and
    evaluated in closed form as ``-2 pi log | f(u - v tau, tau) q^(v^2/2) |``.
    Periodic in both u and v with period 1; diverges iff (u, v) is integral.
    """
    tau = _require_upper(tau)
    uw = _frac_wrap(float(u))
    vw = _frac_wrap(float(v))
    if abs(uw) < SINGULAR_TUBE and abs(vw) < SINGULAR_TUBE:
        raise DivergentSeries("E_{u,v} diverges at integer (u, v)")
    b = tau.imag
    z = uw - vw * tau
    log_absf = math.log(kronecker_f(z, tau, ctl))
    # log|q^(v^2/2)| = -pi b v^2
    return float(-2.0 * np.pi * (log_absf - np.pi * b * vw * vw))


# ---------------------------------------------------------------------------
# Lattice point enumeration and theta sums
# ---------------------------------------------------------------------------


def _enumerate_norms_sq(basis: LatticeBasis, radius: float) -> np.ndarray:
    """Squared norms of all nonzero lattice points with |p| <= radius."""
    u, v = basis.u, basis.v
    vol = basis.covolume
    ki = int(math.ceil(radius * np.linalg.norm(v) / vol)) + 1
    kj = int(math.ceil(radius * np.linalg.norm(u) / vol)) + 1
    if (2 * ki + 1) * (2 * kj + 1) > 64_000_000:
        raise PrecisionUnreachable(
            f"enumeration window {2*ki+1} x {2*kj+1} too large"
        )
    i = np.arange(-ki, ki + 1)
    j = np.arange(-kj, kj + 1)
    ii, jj = np.meshgrid(i, j, indexing="ij")
    x = ii * u[0] + jj * v[0]
    y = ii * u[1] + jj * v[1]
    nsq = (x * x + y * y).ravel()
    center = (2 * kj + 1) * ki + kj  # flat index of (0, 0)
    nsq = np.delete(nsq, center)
    return nsq[nsq <= radius * radius + 1e-12]


def _covering_radius_bound(basis: LatticeBasis) -> float:
    u, v = basis.u, basis.v
    return 0.5 * max(np.linalg.norm(u + v), np.linalg.norm(u - v))


def _theta_radius(basis: LatticeBasis, alpha: float, tol: float) -> float:
    """Radius R with a proven Gaussian-tail bound below tol.

    Every point with |p| >= R satisfies exp(-pi a |p|^2) <=
    exp(-pi a (|y| - rho)^2) for y in its Voronoi cell (rho = covering
    radius), so the tail is bounded by a radial integral in closed form.
    """
    vol = basis.covolume
    rho = _covering_radius_bound(basis)
    r = max(2.0 * rho, math.sqrt(2.0 / (math.pi * alpha)))
    for _ in range(200):
        t0 = r - 2.0 * rho
        if t0 > 0.0:
            tail = (2.0 * math.pi / vol) * math.exp(-math.pi * alpha * t0 * t0) \
                * (1.0 + rho / t0) / (2.0 * math.pi * alpha)
            if tail < tol:
                return r
        r *= 1.25
    raise PrecisionUnreachable("theta tail bound did not close")


def theta_tail_bound(basis: LatticeBasis, alpha: float, radius: float) -> float:
    """Closed-form bound on the theta terms dropped outside |p| <= radius.

    Voronoi-cell comparison with the radial Gaussian integral; valid when
    radius exceeds twice the covering-radius bound (returns inf otherwise).
    """
    rho = _covering_radius_bound(basis)
    t0 = radius - 2.0 * rho
    if t0 <= 0.0:
        return math.inf
    return (2.0 * math.pi / basis.covolume) \
        * math.exp(-math.pi * alpha * t0 * t0) \
        * (1.0 + rho / t0) / (2.0 * math.pi * alpha)


def theta_lattice(basis: LatticeBasis, alpha: float,
                  ctl: SeriesControl = _DEFAULT_CTL) -> float:
    """theta(alpha) = sum over all lattice points of exp(-pi alpha |p|^2).

    The enumeration radius is chosen so the proven Gaussian tail is below
    ctl.abs_tol; ctl.truncation_order acts as a floor measured in shells of
    the shortest lattice vector.
    """
    if not (alpha > 0.0):
        raise NonPositiveParameter("alpha must be > 0")
    radius = _theta_radius(basis, alpha, ctl.abs_tol)
    if ctl.truncation_order > 1:
        radius = max(radius,
                     ctl.truncation_order * math.sqrt(basis.shortest_norm_sq()))
    nsq = _enumerate_norms_sq(basis, radius)
    return 1.0 + float(np.sum(np.exp(-np.pi * alpha * nsq)))


class _ThetaTable:
    """theta(a) - 1 evaluated from a frozen point enumeration, valid a >= a_min."""

    def __init__(self, basis: LatticeBasis, a_min: float, tol: float):
        radius = _theta_radius(basis, a_min, tol)
        self.nsq = _enumerate_norms_sq(basis, radius)
        self.lambda1 = float(np.min(self.nsq)) if self.nsq.size else math.inf

    def centered(self, a: float) -> float:
        return float(np.sum(np.exp(-np.pi * a * self.nsq)))


def _adaptive_simpson(f, a: float, b: float, tol: float, max_depth: int = 28) -> float:
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def rec(x0, x2, f0, f1, f2, acc, tol, depth):
        x1 = 0.5 * (x0 + x2)
        lm = 0.5 * (x0 + x1)
        rm = 0.5 * (x1 + x2)
        flm, frm = f(lm), f(rm)
        left = (x1 - x0) / 6.0 * (f0 + 4.0 * flm + f1)
        right = (x2 - x1) / 6.0 * (f1 + 4.0 * frm + f2)
        if depth <= 0 or abs(left + right - acc) <= 15.0 * tol:
            return left + right + (left + right - acc) / 15.0
        return (rec(x0, x1, f0, flm, f1, left, 0.5 * tol, depth - 1)
                + rec(x1, x2, f1, frm, f2, right, 0.5 * tol, depth - 1))

    return rec(a, b, fa, fm, fb, whole, tol, max_depth)


def _integral_cutoff(table: _ThetaTable, s_max: float, tol: float) -> float:
    """Upper limit A with the remaining weighted-theta tail below tol."""
    lam = math.pi * table.lambda1
    a_end = 4.0
    for _ in range(60):
        rate = lam - max(s_max - 1.0, 0.0) / a_end
        if rate > 0.0:
            tail = table.centered(a_end) * a_end ** max(s_max - 1.0, 0.0) / rate
            if tail < tol:
                return a_end
        a_end *= 1.5
    raise PrecisionUnreachable("integral cutoff search failed")


def epstein_zeta_mellin(basis_dual: LatticeBasis, x: float,
                        ctl: SeriesControl = _DEFAULT_CTL) -> float:
    """zeta(x) of the given lattice through the theta/Mellin route.

    For a lattice L of covolume V with dual L*, and s = 1 + x/2,

      Gamma(s) pi^(-s) sum'_{p in L} |p|^(-2s)
        = int_1^inf (theta_L(a) - 1) a^(s-1) da
          + (1/V) int_1^inf (theta_{L*}(a) - 1) a^(-s) da
          + (1/V)(2/x) - 1/s,

    which reduces to the familiar unimodular identity when V = 1 (where, in
    the plane, theta_{L*} = theta_L).  The covolume factors are kept explicit
    so the route is exact for any scaling.
    """
    if not (x > 0.0):
        raise NonPositiveParameter("zeta route needs x > 0 (pole at x = 0)")
    s = 1.0 + 0.5 * x
    vol = basis_dual.covolume
    dual = basis_dual.dual()
    tol = ctl.abs_tol
    table_l = _ThetaTable(basis_dual, 1.0, tol)
    table_d = _ThetaTable(dual, 1.0, tol)
    a_end = _integral_cutoff(table_l, s, tol)
    i1 = _adaptive_simpson(lambda a: table_l.centered(a) * a ** (s - 1.0),
                           1.0, a_end, tol)
    a_end_d = _integral_cutoff(table_d, 1.0, tol * vol)
    i2 = _adaptive_simpson(lambda a: table_d.centered(a) * a ** (-s),
                           1.0, a_end_d, tol * vol)
    bracket = i1 + i2 / vol + (2.0 / x) / vol - 1.0 / s
    return float(bracket * math.pi ** s / (8.0 * math.pi ** 2 * math.gamma(s)))


def zeta_difference_limit(lat1: LatticeBasis, lat2: LatticeBasis,
                          ctl: SeriesControl = _DEFAULT_CTL) -> float:
    """lim_{x -> 0} [zeta_{L1*}(x) - zeta_{L2*}(x)] for equal-covolume L1, L2.

    The individual zetas blow up at x = 0; for lattices of the same covolume V
    the difference converges and equals

      (1/(8 pi)) [ int_1^inf (theta_{L1*} - theta_{L2*})(a) da
                   + V int_1^inf (theta_{L1} - theta_{L2})(a) da/a ].

    (For unimodular inputs this collapses to the single-integral
    ``(1/(8 pi)) int (theta_1* - theta_2*)(a) (1 + a) da / a`` form.)
    """
    v1, v2 = lat1.covolume, lat2.covolume
    if abs(v1 - v2) > 1e-9 * max(v1, v2):
        raise CovolumeMismatch(f"covolumes differ: {v1} vs {v2}")
    vol = 0.5 * (v1 + v2)
    tol = ctl.abs_tol
    d1, d2 = lat1.dual(), lat2.dual()
    td1 = _ThetaTable(d1, 1.0, tol)
    td2 = _ThetaTable(d2, 1.0, tol)
    tl1 = _ThetaTable(lat1, 1.0, tol)
    tl2 = _ThetaTable(lat2, 1.0, tol)

    a_end = max(_integral_cutoff(td1, 1.0, tol), _integral_cutoff(td2, 1.0, tol))
    i_dual = _adaptive_simpson(lambda a: td1.centered(a) - td2.centered(a),
                               1.0, a_end, tol)
    a_end2 = max(_integral_cutoff(tl1, 1.0, tol / max(vol, 1.0)),
                 _integral_cutoff(tl2, 1.0, tol / max(vol, 1.0)))
    i_lat = _adaptive_simpson(lambda a: (tl1.centered(a) - tl2.centered(a)) / a,
                              1.0, a_end2, tol / max(vol, 1.0))
    return float((i_dual + vol * i_lat) / (8.0 * math.pi))
