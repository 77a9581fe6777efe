"""Constant-obstacle problem for -Delta H + H on convex planar domains.

The continuous problem: minimize the Dirichlet-type energy subject to
boundary value 1 and the lower bound H >= m, equivalently

    -Delta H + H >= 0,   H >= m,   (-Delta H + H) (H - m) = 0  in Omega,
    H = 1 on the boundary.

Discretization is a five-point stencil on a uniform grid of cell centers
(integer multiples of h), with boundary legs shortened to the exact exit
point of the domain (cut legs), which keeps the scheme second order for the
interior values.  The solver is projected red-black SOR (clamp after
update), deterministic for fixed inputs.  The verification helpers measure
the coincidence set {H = m} and test the qualitative facts the solution is
known to satisfy: monotonicity in m, the gradient bound in sqrt(1-m), the
area scale law near the obstacle-activation level, ellipse roundness of the
small coincidence set, and discrete interior/exterior barrier predicates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import (
    GridMismatch,
    InfeasibleObstacle,
    InputError,
    NoConvergence,
    NonConvexDomain,
    NonPositiveParameter,
    UnderResolved,
)

__all__ = [
    "UnitDisk",
    "Ellipse",
    "ConvexPolygon",
    "DomainGrid",
    "H0Field",
    "ObstacleField",
    "solve_h0",
    "solve_obstacle",
    "coincidence_metrics",
    "CoincidenceMetrics",
    "sup_gradient",
    "verify_gradient_bound",
    "GradientBoundReport",
    "verify_scale_law",
    "AsymptoticsReport",
    "verify_ellipse_limit",
    "EllipseLimitReport",
    "quadratic_excess_potential",
    "barrier_check",
    "BarrierCheck",
]

BOUNDARY_VALUE = 1.0
MIN_CUT_FRACTION = 1e-6
ACTIVE_BAND = 10.0          # active iff H - m < ACTIVE_BAND * tol
_UNCONSTRAINED = -1e300


# ---------------------------------------------------------------------------
# Domain shapes
# ---------------------------------------------------------------------------


class UnitDisk:
    """The open unit disk centered at the origin."""

    def bounds(self):
        return (-1.0, 1.0, -1.0, 1.0)

    def contains(self, x, y):
        return x * x + y * y < 1.0

    def exit_fraction(self, px, py, dx, dy):
        """Fraction theta in (0, 1] with p + theta*(dx, dy) on the boundary.

        Callers guarantee p is strictly interior and p + (dx, dy) is not.
        """
        dd = dx * dx + dy * dy
        pd = px * dx + py * dy
        rad = pd * pd + dd * (1.0 - (px * px + py * py))
        return (-pd + np.sqrt(np.maximum(rad, 0.0))) / dd

    def __repr__(self):
        return "UnitDisk()"


class Ellipse:
    """Open axis-aligned ellipse with semi-axes (rx, ry)."""

    def __init__(self, rx: float, ry: float):
        if not (rx > 0.0 and ry > 0.0):
            raise NonPositiveParameter("ellipse semi-axes must be > 0")
        self.rx = float(rx)
        self.ry = float(ry)

    def bounds(self):
        return (-self.rx, self.rx, -self.ry, self.ry)

    def contains(self, x, y):
        xs = x / self.rx
        ys = y / self.ry
        return xs * xs + ys * ys < 1.0

    def exit_fraction(self, px, py, dx, dy):
        qx, qy = px / self.rx, py / self.ry
        ex, ey = dx / self.rx, dy / self.ry
        dd = ex * ex + ey * ey
        pd = qx * ex + qy * ey
        rad = pd * pd + dd * (1.0 - (qx * qx + qy * qy))
        return (-pd + np.sqrt(np.maximum(rad, 0.0))) / dd

    def __repr__(self):
        return f"Ellipse(rx={self.rx}, ry={self.ry})"


class ConvexPolygon:
    """Open convex polygon from counterclockwise vertices, shape (k, 2)."""

    def __init__(self, vertices):
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:
            raise NonConvexDomain("need at least 3 vertices of shape (k, 2)")
        nxt = np.roll(verts, -1, axis=0)
        edges = nxt - verts
        scale = float(np.max(np.abs(verts))) or 1.0
        if np.any(np.hypot(edges[:, 0], edges[:, 1]) <= 1e-12 * scale):
            raise NonConvexDomain("duplicate consecutive vertices")
        area2 = float(np.sum(verts[:, 0] * nxt[:, 1] - nxt[:, 0] * verts[:, 1]))
        if area2 <= 0.0:
            raise NonConvexDomain("vertices must be counterclockwise")
        nxt_edges = np.roll(edges, -1, axis=0)
        turn = edges[:, 0] * nxt_edges[:, 1] - edges[:, 1] * nxt_edges[:, 0]
        if np.any(turn < -1e-12 * scale * scale):
            raise NonConvexDomain("polygon is not convex")
        self.vertices = verts
        self._edges = edges

    def bounds(self):
        v = self.vertices
        return (float(v[:, 0].min()), float(v[:, 0].max()),
                float(v[:, 1].min()), float(v[:, 1].max()))

    def contains(self, x, y):
        inside = np.ones(np.shape(x), dtype=bool)
        for (ax, ay), (ex, ey) in zip(self.vertices, self._edges):
            inside &= ex * (y - ay) - ey * (x - ax) > 0.0
        return inside

    def exit_fraction(self, px, py, dx, dy):
        px = np.asarray(px, float)
        theta = np.full(px.shape, np.inf)
        for (ax, ay), (ex, ey) in zip(self.vertices, self._edges):
            # outward normal of a CCW edge is (ey, -ex)
            denom = ey * dx - ex * dy
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (ey * (ax - px) - ex * (ay - py)) / denom
                u = (ex * (px + t * dx - ax) + ey * (py + t * dy - ay)) \
                    / (ex * ex + ey * ey)
            hit = (denom > 0.0) & (t > 0.0) & (u >= -1e-9) & (u <= 1.0 + 1e-9)
            theta = np.where(hit & (t < theta), t, theta)
        return np.minimum(theta, 1.0)

    def __repr__(self):
        return f"ConvexPolygon({self.vertices.tolist()})"


# ---------------------------------------------------------------------------
# Grid and discrete operator
# ---------------------------------------------------------------------------


class DomainGrid:
    """Cell-centered grid over a convex shape with cut boundary legs.

    Unknowns live at cell centers strictly inside the shape; each of the
    four stencil legs either reaches another interior center (length h) or
    is shortened to the boundary exit point and carries the Dirichlet datum.
    ``mask`` classifies the full rectangle of cells: 0 exterior, 1 interior
    unknown, 2 boundary-data cell (exterior neighbor of an interior cell).
    """

    def __init__(self, shape, h: float):
        if not (h > 0.0):
            raise NonPositiveParameter("grid spacing h must be > 0")
        self.shape = shape
        self.h = float(h)
        xmin, xmax, ymin, ymax = shape.bounds()
        imin = int(math.floor(xmin / h)) - 1
        imax = int(math.ceil(xmax / h)) + 1
        jmin = int(math.floor(ymin / h)) - 1
        jmax = int(math.ceil(ymax / h)) + 1
        self.xs = np.arange(imin, imax + 1, dtype=np.int64) * self.h
        self.ys = np.arange(jmin, jmax + 1, dtype=np.int64) * self.h
        gx, gy = np.meshgrid(self.xs, self.ys, indexing="ij")
        interior = np.asarray(shape.contains(gx, gy), dtype=bool)
        interior[0, :] = interior[-1, :] = False
        interior[:, 0] = interior[:, -1] = False
        self.n = int(interior.sum())
        if self.n == 0:
            raise InputError("grid spacing too coarse: no interior cells")
        ids = np.full(interior.shape, -1, dtype=np.int64)
        ii, jj = np.nonzero(interior)
        ids[ii, jj] = np.arange(self.n, dtype=np.int64)
        self.ii, self.jj = ii, jj
        self.xy = np.column_stack([self.xs[ii], self.ys[jj]])
        mask = np.zeros(interior.shape, dtype=np.int8)
        mask[interior] = 1

        px, py = self.xy[:, 0], self.xy[:, 1]
        legs, gidx, nbin = {}, {}, {}
        for name, di, dj in (("E", 1, 0), ("W", -1, 0),
                             ("N", 0, 1), ("S", 0, -1)):
            nb = interior[ii + di, jj + dj]
            leg = np.full(self.n, self.h)
            cut = ~nb
            if np.any(cut):
                theta = shape.exit_fraction(px[cut], py[cut],
                                            di * self.h, dj * self.h)
                leg[cut] = np.clip(theta, MIN_CUT_FRACTION, 1.0) * self.h
                mask[ii[cut] + di, jj[cut] + dj] = 2
            legs[name] = leg
            gidx[name] = np.where(nb, ids[ii + di, jj + dj], 0).astype(np.int64)
            nbin[name] = nb
        self.mask = mask
        self._legs = legs
        self._gidx = gidx
        self._nbin = nbin

        cE = 2.0 / (legs["E"] * (legs["E"] + legs["W"]))
        cW = 2.0 / (legs["W"] * (legs["E"] + legs["W"]))
        cN = 2.0 / (legs["N"] * (legs["N"] + legs["S"]))
        cS = 2.0 / (legs["S"] * (legs["N"] + legs["S"]))
        self.diag = 2.0 / (legs["E"] * legs["W"]) \
            + 2.0 / (legs["N"] * legs["S"]) + 1.0
        coef = {"E": cE, "W": cW, "N": cN, "S": cS}
        self._gcoef = {k: np.where(nbin[k], coef[k], 0.0) for k in coef}
        self._bc_unit = sum(np.where(~nbin[k], coef[k], 0.0) for k in coef)

        color = ((ii + jj) % 2).astype(bool)
        self._sweep_sets = []
        for sel in (np.nonzero(~color)[0], np.nonzero(color)[0]):
            sel = sel.astype(np.int64)
            self._sweep_sets.append((
                sel,
                self._gidx["E"][sel], self._gidx["W"][sel],
                self._gidx["N"][sel], self._gidx["S"][sel],
                self._gcoef["E"][sel], self._gcoef["W"][sel],
                self._gcoef["N"][sel], self._gcoef["S"][sel],
                self.diag[sel], self._bc_unit[sel],
            ))

    @property
    def interior_count(self) -> int:
        return self.n

    @property
    def area(self) -> float:
        """Discrete domain area, interior cell count times h^2."""
        return self.n * self.h * self.h

    def operator_values(self, values: np.ndarray,
                        boundary_value: float = BOUNDARY_VALUE) -> np.ndarray:
        """(-Delta_h + 1) applied to interior values with Dirichlet data."""
        g = self._gcoef
        i = self._gidx
        gather = (g["E"] * values[i["E"]] + g["W"] * values[i["W"]]
                  + g["N"] * values[i["N"]] + g["S"] * values[i["S"]])
        return self.diag * values - gather - boundary_value * self._bc_unit

    def scaled_residual(self, values: np.ndarray,
                        boundary_value: float = BOUNDARY_VALUE) -> np.ndarray:
        """Operator values divided by the diagonal (Jacobi scaling)."""
        return self.operator_values(values, boundary_value) / self.diag

    def leg_gradients(self, values: np.ndarray,
                      boundary_value: float = BOUNDARY_VALUE):
        """One-sided difference quotient along every stencil leg, (4, n)."""
        out = np.empty((4, self.n))
        for k, name in enumerate("EWNS"):
            nbv = np.where(self._nbin[name], values[self._gidx[name]],
                           boundary_value)
            out[k] = (nbv - values) / self._legs[name]
        return out


# ---------------------------------------------------------------------------
# Projected SOR solver
# ---------------------------------------------------------------------------


def _relax(grid: DomainGrid, obstacle: float, tol: float, max_sweeps,
           check_every: int = 16):
    if not (tol > 0.0):
        raise NonPositiveParameter("tol must be > 0")
    cap = max_sweeps if max_sweeps else max(20000, int(math.ceil(80.0 / grid.h)))
    omega = 2.0 / (1.0 + math.sin(math.pi * grid.h / 2.0))
    v = np.ones(grid.n)
    if obstacle > _UNCONSTRAINED / 2:
        np.maximum(v, obstacle, out=v)
    res = math.inf
    for it in range(1, cap + 1):
        for args in grid._sweep_sets:
            backend.psor_sweep(v, *args, float(obstacle), omega)
        if it % check_every == 0 or it == cap:
            scaled = grid.scaled_residual(v)
            if obstacle < _UNCONSTRAINED / 2:
                res = float(np.max(np.abs(scaled)))
            else:
                res = float(np.max(np.abs(np.minimum(v - obstacle, scaled))))
            if res < tol:
                return v, it, res
    raise NoConvergence(
        f"projected SOR: residual {res:.3e} after {cap} sweeps (tol {tol:g})"
    )


@dataclass
class H0Field:
    """Unconstrained solve: boundary value 1, no obstacle.

    ``min_value`` is the interior minimum (the level below which an obstacle
    stays inactive) and ``critical_field`` = 1/(2(1 - min_value)),
    the derived first-critical-field constant.
    """

    grid: DomainGrid
    values: np.ndarray
    min_value: float
    argmin_xy: tuple
    critical_field: float
    iters: int
    residual: float
    tol: float

    def to_csv(self) -> str:
        return _field_csv(self.grid, self.values, None)

    def to_json_dict(self) -> dict:
        return {
            "min_value": self.min_value,
            "argmin_xy": list(self.argmin_xy),
            "critical_field": self.critical_field,
            "iters": self.iters,
            "residual": self.residual,
            "interior_cells": self.grid.n,
            "h": self.grid.h,
        }


def solve_h0(grid: DomainGrid, tol: float = 1e-10,
             max_sweeps=None) -> H0Field:
    """Relaxation solve of the unconstrained problem, plus its minimum."""
    v, iters, res = _relax(grid, _UNCONSTRAINED, tol, max_sweeps)
    k = int(np.argmin(v))
    mn = float(v[k])
    thr = math.inf if mn >= 1.0 - 1e-15 else 1.0 / (2.0 * (1.0 - mn))
    return H0Field(grid=grid, values=v, min_value=mn,
                   argmin_xy=(float(grid.xy[k, 0]), float(grid.xy[k, 1])),
                   critical_field=thr, iters=iters, residual=res, tol=tol)


@dataclass
class ObstacleField:
    """Converged obstacle solve at level m with its active (contact) set."""

    grid: DomainGrid
    m: float
    values: np.ndarray
    active: np.ndarray
    residual: float
    iters: int
    tol: float

    def to_csv(self) -> str:
        return _field_csv(self.grid, self.values, self.active)

    def to_json_dict(self) -> dict:
        met = coincidence_metrics(self)
        return {
            "m": self.m,
            "iters": self.iters,
            "residual": self.residual,
            "active_cells": int(np.count_nonzero(self.active)),
            "coincidence": met.to_json_dict(),
            "h": self.grid.h,
        }


def solve_obstacle(grid: DomainGrid, m: float, tol: float = 1e-10,
                   max_sweeps=None) -> ObstacleField:
    """Projected relaxation for the obstacle at level m (requires m <= 1).

    Convergence criterion is the complementarity residual
    sup |min(H - m, scaled operator value)| < tol; cells within
    ``ACTIVE_BAND * tol`` of the obstacle are flagged active.
    """
    m = float(m)
    if not math.isfinite(m) or m > 1.0:
        raise InfeasibleObstacle(
            f"obstacle level m = {m} above the boundary value 1"
        )
    v, iters, res = _relax(grid, m, tol, max_sweeps)
    active = (v - m) < ACTIVE_BAND * tol
    return ObstacleField(grid=grid, m=m, values=v, active=active,
                         residual=res, iters=iters, tol=tol)


def _field_csv(grid: DomainGrid, values: np.ndarray, active) -> str:
    """CSV rows x,y,H,active over interior and boundary-data cells."""
    lines = ["x,y,H,active"]
    full_vals = np.where(grid.mask == 2, BOUNDARY_VALUE, 0.0)
    full_vals[grid.ii, grid.jj] = values
    full_act = np.zeros(grid.mask.shape, dtype=np.int8)
    if active is not None:
        full_act[grid.ii, grid.jj] = active.astype(np.int8)
    sel_i, sel_j = np.nonzero(grid.mask > 0)
    for i, j in zip(sel_i, sel_j):
        lines.append("%.9g,%.9g,%.9g,%d" % (
            grid.xs[i], grid.ys[j], full_vals[i, j], full_act[i, j]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Coincidence-set measurements
# ---------------------------------------------------------------------------


@dataclass
class CoincidenceMetrics:
    """Cell-counting geometry of the contact set."""

    area: float
    centroid: tuple
    axes: tuple            # principal full semi-axis estimates, major first
    axis_ratio: float
    count: int
    empty: bool

    def to_json_dict(self) -> dict:
        return {
            "area": self.area,
            "centroid": list(self.centroid),
            "axes": list(self.axes),
            "axis_ratio": self.axis_ratio,
            "count": self.count,
            "empty": self.empty,
        }


def coincidence_metrics(field: ObstacleField) -> CoincidenceMetrics:
    """Area, centroid, and principal axes of the active set.

    Axes come from second moments of the active cell centers (plus the
    h^2/12 moment of a cell itself), normalized so a filled ellipse with
    semi-axes (p, q) reports approximately (p, q).
    """
    act = np.asarray(field.active, bool)
    count = int(np.count_nonzero(act))
    h = field.grid.h
    if count == 0:
        return CoincidenceMetrics(area=0.0, centroid=(0.0, 0.0),
                                  axes=(0.0, 0.0), axis_ratio=1.0,
                                  count=0, empty=True)
    pts = field.grid.xy[act]
    centroid = pts.mean(axis=0)
    d = pts - centroid
    cov = (d.T @ d) / count + (h * h / 12.0) * np.eye(2)
    eigs = np.linalg.eigvalsh(cov)          # ascending
    axes = (2.0 * math.sqrt(max(eigs[1], 0.0)),
            2.0 * math.sqrt(max(eigs[0], 0.0)))
    ratio = axes[0] / axes[1] if axes[1] > 0.0 else math.inf
    return CoincidenceMetrics(area=count * h * h,
                              centroid=(float(centroid[0]), float(centroid[1])),
                              axes=axes, axis_ratio=float(ratio),
                              count=count, empty=False)


def sup_gradient(field: ObstacleField) -> float:
    """Discrete sup-norm gradient via one-sided leg difference quotients."""
    return float(np.max(np.abs(field.grid.leg_gradients(field.values))))


# ---------------------------------------------------------------------------
# Verification suite
# ---------------------------------------------------------------------------


@dataclass
class GradientBoundReport:
    """sup|grad H| against sqrt(1-m), and area deficit of the contact set."""

    rows: list                  # dicts per m
    ratio_variation: float      # (max - min)/min over finite gradient ratios
    variation_ok: bool          # < 50% variation
    deficit_spread: float       # max/min over finite deficit ratios
    deficit_bounded: bool

    def to_json_dict(self) -> dict:
        return {
            "rows": self.rows,
            "ratio_variation": self.ratio_variation,
            "variation_ok": self.variation_ok,
            "deficit_spread": self.deficit_spread,
            "deficit_bounded": self.deficit_bounded,
        }


def verify_gradient_bound(fields) -> GradientBoundReport:
    """Check sup|grad H_m| / sqrt(1-m) stays near-constant as m -> 1.

    Also records the area deficit (domain minus contact set) against the
    same sqrt(1-m) scale.  Levels with 1-m below roundoff report zero
    gradient and are excluded from the variation statistics.
    """
    rows = []
    grad_ratios = []
    deficit_ratios = []
    for f in sorted(fields, key=lambda f: f.m):
        gap = 1.0 - f.m
        sg = sup_gradient(f)
        met = coincidence_metrics(f)
        deficit = f.grid.area - met.area
        if gap > 1e-14:
            ratio = sg / math.sqrt(gap)
            dratio = deficit / math.sqrt(gap)
            grad_ratios.append(ratio)
            deficit_ratios.append(dratio)
        else:
            ratio = 0.0 if sg < 100.0 * f.tol else math.inf
            dratio = 0.0
        rows.append({
            "m": f.m, "sup_gradient": sg, "gradient_ratio": ratio,
            "area_deficit": deficit, "deficit_ratio": dratio,
        })
    if len(grad_ratios) >= 2 and min(grad_ratios) > 0.0:
        variation = max(grad_ratios) / min(grad_ratios) - 1.0
    else:
        variation = 0.0
    if len(deficit_ratios) >= 2 and min(deficit_ratios) > 0.0:
        spread = max(deficit_ratios) / min(deficit_ratios)
    else:
        spread = 1.0
    return GradientBoundReport(rows=rows, ratio_variation=variation,
                               variation_ok=variation < 0.5,
                               deficit_spread=spread,
                               deficit_bounded=spread < 3.0)


@dataclass
class AsymptoticsReport:
    """Contact-set area against the near-activation scale law.

    Each row compares L^2 |log L| (L = sqrt(area)) with
    2 pi (m - base)/base; rows at or below the activation level are listed
    in ``excluded`` with their empty contact sets, never given a ratio.
    """

    base_level: float
    rows: list                    # dicts per m above base_level
    excluded: list                # dicts for m at/below base_level
    all_in_band: bool
    trend_toward_one: bool
    band: tuple = (0.5, 2.0)

    def to_json_dict(self) -> dict:
        return {
            "base_level": self.base_level,
            "rows": self.rows,
            "excluded": self.excluded,
            "band": list(self.band),
            "all_in_band": self.all_in_band,
            "trend_toward_one": self.trend_toward_one,
        }


def verify_scale_law(fields, base_level: float,
                     min_cells: int = 30) -> AsymptoticsReport:
    """Form the scale-law ratios for converged fields above ``base_level``.

    ``base_level`` should be the unconstrained minimum on the same grid.
    Raises UnderResolved when a level above the base has fewer active cells
    than ``min_cells`` (the area estimate would be noise).
    """
    rows, excluded = [], []
    lo, hi = 0.5, 2.0
    for f in sorted(fields, key=lambda f: f.m):
        offset = f.m - base_level
        met = coincidence_metrics(f)
        if offset <= 0.0:
            excluded.append({"m": f.m, "offset": offset,
                             "count": met.count, "empty": met.empty})
            continue
        if met.count < min_cells:
            raise UnderResolved(
                f"contact set at m={f.m} has {met.count} cells "
                f"(need >= {min_cells}); refine h"
            )
        length = math.sqrt(met.area)
        predicted = 2.0 * math.pi * offset / base_level
        ratio = length * length * abs(math.log(length)) / predicted
        rows.append({
            "m": f.m, "offset": offset, "area": met.area,
            "count": met.count, "length": length, "ratio": ratio,
            "axis_ratio": met.axis_ratio,
            "in_band": bool(lo <= ratio <= hi),
        })
    all_in_band = all(r["in_band"] for r in rows) if rows else False
    if len(rows) >= 2:
        trend = abs(rows[0]["ratio"] - 1.0) <= abs(rows[-1]["ratio"] - 1.0) \
            + 1e-12
    else:
        trend = True
    return AsymptoticsReport(base_level=base_level, rows=rows,
                             excluded=excluded, all_in_band=all_in_band,
                             trend_toward_one=trend)


@dataclass
class EllipseLimitReport:
    """Rescaled contact set against the area-1 disk limit shape."""

    count: int
    length: float              # sqrt(area), the rescaling factor
    axis_ratio: float
    outer_defect: float        # how far active cells poke out of the disk
    inner_defect: float        # how far inactive cells intrude into it
    limit_radius: float
    quad_coefficient: float

    def to_json_dict(self) -> dict:
        return {
            "count": self.count,
            "length": self.length,
            "axis_ratio": self.axis_ratio,
            "outer_defect": self.outer_defect,
            "inner_defect": self.inner_defect,
            "limit_radius": self.limit_radius,
            "quad_coefficient": self.quad_coefficient,
        }


def verify_ellipse_limit(field: ObstacleField, q_iso: float = 1.0,
                         min_cells: int = 30) -> EllipseLimitReport:
    """Compare the rescaled contact set with the unit-area disk.

    For an isotropic quadratic expansion at the minimum the limit shape is
    the disk of area 1 (radius 1/sqrt(pi)).  The contact set, centered and
    rescaled by L = sqrt(area), is compared against that disk: the outer
    defect is the worst relative protrusion of an active cell, the inner
    defect the worst relative intrusion of an inactive cell.
    """
    met = coincidence_metrics(field)
    if met.count < min_cells:
        raise UnderResolved(
            f"contact set has {met.count} cells (need >= {min_cells})"
        )
    length = math.sqrt(met.area)
    r0 = 1.0 / math.sqrt(math.pi)
    act = np.asarray(field.active, bool)
    cx, cy = met.centroid
    rel = (field.grid.xy - np.array([cx, cy])) / length
    rr = np.hypot(rel[:, 0], rel[:, 1])
    outer = float(np.max(rr[act])) / r0 - 1.0
    inner = 1.0 - float(np.min(rr[~act])) / r0 if np.any(~act) else 0.0
    return EllipseLimitReport(
        count=met.count, length=length, axis_ratio=met.axis_ratio,
        outer_defect=max(0.0, outer), inner_defect=max(0.0, inner),
        limit_radius=r0, quad_coefficient=float(q_iso),
    )


def quadratic_excess_potential(r, quad_laplacian: float):
    """Radial correction potential of an isotropic quadratic well.

    Vanishes on the closed disk of area 1 (radius r0 = 1/sqrt(pi)) and
    solves the radial Poisson problem with constant source
    ``quad_laplacian`` outside it, matched C^1 at r0:

        (q/4) (r^2 - r0^2) - (q/2) r0^2 log(r/r0)   for r >= r0.

    Grows like (q/4) r^2; accepts scalars or arrays.
    """
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0.0):
        raise NonPositiveParameter("radius must be >= 0")
    q = float(quad_laplacian)
    r0sq = 1.0 / math.pi
    with np.errstate(divide="ignore", invalid="ignore"):
        grown = (q / 4.0) * (arr * arr - r0sq) \
            - (q / 4.0) * r0sq * np.log(arr * arr * math.pi)
    out = np.where(arr * arr <= r0sq, 0.0, grown)
    if np.isscalar(r) or np.ndim(r) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Barrier predicates
# ---------------------------------------------------------------------------


@dataclass
class BarrierCheck:
    """Discrete barrier-comparison verdict; truthy iff the conclusion holds.

    ``hypotheses`` itemizes the premises actually verified; a failed
    premise does not suppress the conclusion check, it only flags that the
    comparison principle was not entitled to it.
    """

    kind: str
    hypotheses: dict
    hypotheses_ok: bool
    conclusion_holds: bool
    margin: float

    def __bool__(self):
        return self.conclusion_holds

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "hypotheses": self.hypotheses,
            "hypotheses_ok": self.hypotheses_ok,
            "conclusion_holds": self.conclusion_holds,
            "margin": self.margin,
        }


def barrier_check(field: ObstacleField, candidate, kind: str,
                  candidate_boundary: float = BOUNDARY_VALUE,
                  tol: float = 1e-8) -> BarrierCheck:
    """Check a discrete comparison function against a converged solve.

    Interior kind: a candidate lying above the solution's boundary data,
    above the obstacle, with nonnegative operator values, must dominate the
    solution cellwise.  Exterior kind: a candidate below the boundary data,
    above the obstacle, whose operator values are nonpositive off its own
    contact set (and at most m on it), must be dominated by the solution.
    """
    cand = np.asarray(candidate, dtype=float).ravel()
    if cand.shape != field.values.shape:
        raise GridMismatch(
            f"candidate has {cand.size} cells, field has {field.values.size}"
        )
    kind_l = str(kind).lower()
    if kind_l not in ("interior", "exterior"):
        raise InputError("barrier kind must be 'interior' or 'exterior'")
    grid = field.grid
    m = field.m
    scaled = grid.scaled_residual(cand, boundary_value=candidate_boundary)
    hyp = {}
    if kind_l == "interior":
        hyp["boundary_dominates"] = bool(
            candidate_boundary >= BOUNDARY_VALUE - tol)
        hyp["above_obstacle"] = bool(np.all(cand >= m - tol))
        hyp["operator_nonnegative"] = bool(np.all(scaled >= -tol))
        margin = float(np.min(cand - field.values))
        conclusion = margin >= -ACTIVE_BAND * tol
    else:
        hyp["boundary_dominated"] = bool(
            candidate_boundary <= BOUNDARY_VALUE + tol)
        hyp["above_obstacle"] = bool(np.all(cand >= m - tol))
        contact = cand <= m + ACTIVE_BAND * max(tol, field.tol)
        ok_free = bool(np.all(scaled[~contact] <= tol)) \
            if np.any(~contact) else True
        bound_on_contact = m / grid.diag[contact] + tol
        ok_contact = bool(np.all(scaled[contact] <= bound_on_contact)) \
            if np.any(contact) else True
        hyp["operator_nonpositive_off_contact"] = ok_free and ok_contact
        margin = float(np.max(cand - field.values))
        conclusion = margin <= ACTIVE_BAND * tol
    return BarrierCheck(kind=kind_l, hypotheses=hyp,
                        hypotheses_ok=all(hyp.values()),
                        conclusion_holds=bool(conclusion),
                        margin=margin)
