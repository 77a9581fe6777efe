"""Command-line front end.

Four subcommands drive the library: ``lattice`` (single energy evaluations),
``moduli-scan`` (shape optimization over the fundamental domain), ``fekete``
(torus point-configuration search and the related experiments), and
``obstacle`` (constant-obstacle solves and their verification suites).

Output contract: JSON reports to stdout or ``--output`` with 12 significant
digits, sorted keys, an embedded run configuration, and a version stamp; CSV
side files with 9 significant digits.  Identical invocations produce
byte-identical output (no timestamps, fixed seeds, deterministic solvers).
Exit codes: 0 success, 2 input/usage error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from ._version import __version__
from .errors import InputError, NumericalError
from .lattice import (
    DEFAULT_PROBES,
    ModuliGrid,
    TRIANGULAR_TAU,
    lattice_to_tau,
    moduli_scan,
    w_eta,
    w_fourier,
    w_zeta_diff,
)
from .modular import LatticeBasis, SeriesControl
from .obstacle import (
    ConvexPolygon,
    DomainGrid,
    Ellipse,
    UnitDisk,
    coincidence_metrics,
    solve_h0,
    solve_obstacle,
    verify_ellipse_limit,
    verify_gradient_bound,
    verify_scale_law,
)
from .torus import (
    MinimizeControl,
    TorusConfig,
    TorusSpec,
    _random_start,
    conjecture1_probe,
    elkies_experiment,
    minimize_config,
)

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Serialization helpers
# ---------------------------------------------------------------------------


def _json_ready(obj):
    """Recursively normalize a payload: 12 significant digits, plain types."""
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.12g}") if math.isfinite(x) else x
    if isinstance(obj, np.ndarray):
        return _json_ready(obj.tolist())
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def _emit_json(payload: dict, path) -> None:
    text = json.dumps(_json_ready(payload), sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_text(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


def _payload(command: str, params: dict) -> dict:
    return {"version": __version__,
            "run_config": {"command": command, **params}}


def _series_control(args) -> SeriesControl:
    return SeriesControl(truncation_order=args.truncation_order,
                         abs_tol=args.abs_tol, max_terms=args.max_terms)


def _add_series_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--abs-tol", type=float, default=1e-12,
                   help="absolute tolerance driving series truncations")
    p.add_argument("--truncation-order", type=int, default=1,
                   help="minimum number of series terms/shells")
    p.add_argument("--max-terms", type=int, default=512,
                   help="hard cap on automatic series length")


# ---------------------------------------------------------------------------
# lattice
# ---------------------------------------------------------------------------


def cmd_lattice(args) -> int:
    if (args.tau is None) == (args.basis is None):
        raise InputError("provide exactly one of --tau A B or --basis U1 U2 V1 V2")
    ctl = _series_control(args)
    if args.tau is not None:
        tau = complex(args.tau[0], args.tau[1])
        m = args.m if args.m is not None else 1.0
    else:
        u1, u2, v1, v2 = args.basis
        basis = LatticeBasis((u1, u2), (v1, v2))
        tau, scale = lattice_to_tau(basis)
        # default density: the one the given basis actually has
        m = args.m if args.m is not None else 1.0 / (scale * scale)
    ref = complex(args.ref_tau[0], args.ref_tau[1])
    params = {
        "m": m, "route": args.route,
        "tau": [tau.real, tau.imag],
        "ref_tau": [ref.real, ref.imag],
        "probes": list(args.probes),
        "abs_tol": args.abs_tol,
        "truncation_order": args.truncation_order,
        "max_terms": args.max_terms,
    }
    payload = _payload("lattice", params)
    if args.route == "eta":
        payload["report"] = w_eta(tau, m, ctl).to_dict()
    elif args.route == "fourier":
        payload["report"] = w_fourier(tau, m, tuple(args.probes), ctl).to_dict()
    else:  # zetadiff-vs
        diff = w_zeta_diff(tau, ref, m, ctl)
        payload["report"] = {
            "value": diff,
            "route": "zetadiff-vs",
            "reference_tau": [ref.real, ref.imag],
        }
    _emit_json(payload, args.output)
    return 0


# ---------------------------------------------------------------------------
# moduli-scan
# ---------------------------------------------------------------------------


def cmd_moduli_scan(args) -> int:
    ctl = _series_control(args)
    grid = ModuliGrid(a_range=(args.a_min, args.a_max),
                      b_range=(args.b_min, args.b_max),
                      resolution=args.resolution)
    report = moduli_scan(grid, args.m, ctl, refine_iters=args.refine_iters)
    params = {
        "a_min": args.a_min, "a_max": args.a_max,
        "b_min": args.b_min, "b_max": args.b_max,
        "resolution": args.resolution, "m": args.m,
        "refine_iters": args.refine_iters, "abs_tol": args.abs_tol,
    }
    payload = _payload("moduli-scan", params)
    payload["scan"] = report.to_json_dict()
    if args.csv:
        _write_text(args.csv, report.to_csv())
        payload["csv_path"] = args.csv
    _emit_json(payload, args.output)
    return 0


# ---------------------------------------------------------------------------
# fekete
# ---------------------------------------------------------------------------


def _make_torus(args) -> TorusSpec:
    if args.torus == "square":
        return TorusSpec.square()
    if args.torus == "hex":
        return TorusSpec.hexagonal()
    return TorusSpec.rectangular(args.aspect)


def cmd_fekete(args) -> int:
    series = _series_control(args)
    mctl = MinimizeControl(max_iters=args.max_iters, grad_tol=args.grad_tol,
                           step_init=args.step, restarts=args.restarts,
                           rng_seed=args.seed)
    base_params = {
        "torus": args.torus, "aspect": args.aspect, "seed": args.seed,
        "restarts": args.restarts, "max_iters": args.max_iters,
        "grad_tol": args.grad_tol, "step": args.step,
        "abs_tol": args.abs_tol,
    }
    if args.elkies:
        params = dict(base_params, mode="elkies", n_max=args.n_max)
        payload = _payload("fekete", params)
        rep = elkies_experiment(range(2, args.n_max + 1), _make_torus(args),
                                mctl, series)
        payload["elkies"] = rep.to_json_dict()
        _emit_json(payload, args.output)
        return 0
    if args.conjecture1:
        n_list = args.n_list if args.n_list else [2, 3, 4]
        params = dict(base_params, mode="conjecture1", n_list=list(n_list))
        payload = _payload("fekete", params)
        rep = conjecture1_probe(n_list, mctl, series)
        payload["conjecture1"] = rep.to_json_dict()
        _emit_json(payload, args.output)
        return 0
    if args.n is None:
        raise InputError("provide --n (or one of --elkies / --conjecture1)")
    n = args.n
    if n < 1:
        raise InputError("--n must be >= 1")
    torus = _make_torus(args)
    start = _random_start(n, np.random.default_rng((args.seed, 0, n)))
    out = minimize_config(TorusConfig(torus, start), mctl, series)
    params = dict(base_params, mode="minimize", n=n)
    payload = _payload("fekete", params)
    payload["energy"] = out.report.to_dict()
    payload["config"] = out.config.to_json_dict()
    payload["stalled"] = out.stalled
    payload["final_grad_norm"] = out.trace[-1][2] if out.trace else 0.0
    payload["iterations"] = len(out.trace) - 1
    payload["restart_table"] = [
        {"index": i, "energy": e, "iters": k, "grad_norm": g, "stalled": s}
        for i, e, k, g, s in out.restart_table
    ]
    if args.trace_csv:
        rows = ["iter,energy,grad_norm"]
        rows += ["%d,%.9g,%.9g" % (i, e, g) for i, e, g in out.trace]
        _write_text(args.trace_csv, "\n".join(rows) + "\n")
        payload["trace_csv_path"] = args.trace_csv
    _emit_json(payload, args.output)
    return 0


# ---------------------------------------------------------------------------
# obstacle
# ---------------------------------------------------------------------------


def _make_shape(args):
    chosen = [bool(args.disk), args.ellipse is not None,
              args.polygon is not None]
    if sum(chosen) != 1:
        raise InputError(
            "provide exactly one of --disk, --ellipse RX RY, --polygon ..."
        )
    if args.disk:
        return UnitDisk(), {"shape": "disk"}
    if args.ellipse is not None:
        rx, ry = args.ellipse
        return Ellipse(rx, ry), {"shape": "ellipse", "rx": rx, "ry": ry}
    coords = args.polygon
    if len(coords) < 6 or len(coords) % 2:
        raise InputError("--polygon needs an even number (>= 6) of coordinates")
    verts = [(coords[i], coords[i + 1]) for i in range(0, len(coords), 2)]
    return ConvexPolygon(verts), {"shape": "polygon", "vertices": verts}


def _monotone_pad(grid: DomainGrid, tol: float) -> float:
    # value error behind a Jacobi-scaled residual of size tol is at most
    # about max(diag) * tol; pad comparisons by a small multiple of that
    return 20.0 * tol / (grid.h * grid.h)


def _basic_suite(grid: DomainGrid, tol: float, max_sweeps) -> dict:
    """Activation threshold, endpoint, monotonicity, and mass checks."""
    h0 = solve_h0(grid, tol, max_sweeps)
    pad = _monotone_pad(grid, tol)
    low = solve_obstacle(grid, 0.5, tol, max_sweeps)
    top = solve_obstacle(grid, 1.0, tol, max_sweeps)
    levels = (0.80, 0.85, 0.90, 0.95)
    fields = [solve_obstacle(grid, m, tol, max_sweeps) for m in levels]

    chain = [low] + fields + [top]
    monotone = True
    for f1, f2 in zip(chain, chain[1:]):
        dv = f2.values - f1.values
        if float(dv.min()) < -pad or float(dv.max()) > (f2.m - f1.m) + pad:
            monotone = False
    mass = [f.m * coincidence_metrics(f).area for f in chain]
    increasing_mass = all(m2 >= m1 - 1e-12 for m1, m2 in zip(mass, mass[1:]))
    spans = (mass[0] == 0.0
             and abs(mass[-1] - grid.area) <= 1e-12 * max(grid.area, 1.0))
    verdict = {
        "h0": h0.to_json_dict(),
        "empty_below_threshold": bool(not np.any(low.active)),
        "inactive_matches_unconstrained": bool(
            float(np.max(np.abs(low.values - h0.values))) < pad),
        "full_at_top": bool(np.all(top.active)),
        "top_area": coincidence_metrics(top).area,
        "domain_area": grid.area,
        "monotone_in_m": monotone,
        "monotone_pad": pad,
        "increasing_mass": increasing_mass,
        "mass_spans_domain": spans,
        "complementarity_residuals": [f.residual for f in chain],
        "levels": [f.to_json_dict() for f in fields],
    }
    verdict["all_pass"] = all((
        verdict["empty_below_threshold"],
        verdict["inactive_matches_unconstrained"],
        verdict["full_at_top"],
        verdict["monotone_in_m"],
        verdict["increasing_mass"],
        verdict["mass_spans_domain"],
        all(r < tol for r in verdict["complementarity_residuals"]),
    ))
    return verdict


def cmd_obstacle(args) -> int:
    shape, shape_params = _make_shape(args)
    suite = args.suite
    h = args.h if args.h is not None else (
        1.0 / 256.0 if suite in ("scale-law", "ellipse") else 1.0 / 128.0)
    grid = DomainGrid(shape, h)
    params = dict(shape_params, h=h, tol=args.tol, suite=suite,
                  m=args.m, m_grid=list(args.m_grid) if args.m_grid else None,
                  offsets=list(args.offsets) if args.offsets else None)
    payload = _payload("obstacle", params)
    payload["grid"] = {"h": h, "interior_cells": grid.n, "area": grid.area}

    if suite is None:
        if args.m is not None:
            ms = [args.m]
        elif args.m_grid:
            ms = list(args.m_grid)
        else:
            raise InputError("provide --m, --m-grid, or --suite")
        fields = [solve_obstacle(grid, m, args.tol, args.max_sweeps)
                  for m in ms]
        payload["fields"] = [f.to_json_dict() for f in fields]
        if args.field_csv:
            if len(fields) != 1:
                raise InputError("--field-csv requires exactly one level")
            _write_text(args.field_csv, fields[0].to_csv())
            payload["field_csv_path"] = args.field_csv
    elif suite == "propA1":
        payload["suite"] = _basic_suite(grid, args.tol, args.max_sweeps)
    elif suite == "gradient-bound":
        ms = list(args.m_grid) if args.m_grid else [0.90, 0.95, 0.99]
        fields = [solve_obstacle(grid, m, args.tol, args.max_sweeps)
                  for m in ms]
        payload["suite"] = verify_gradient_bound(fields).to_json_dict()
    elif suite == "scale-law":
        base = solve_h0(grid, args.tol, args.max_sweeps)
        offsets = list(args.offsets) if args.offsets else [0.02, 0.04]
        fields = [solve_obstacle(grid, base.min_value + off, args.tol,
                                 args.max_sweeps) for off in offsets]
        payload["h0"] = base.to_json_dict()
        payload["suite"] = verify_scale_law(fields, base.min_value) \
            .to_json_dict()
    else:  # ellipse
        base = solve_h0(grid, args.tol, args.max_sweeps)
        off = args.offsets[0] if args.offsets else 0.03
        fld = solve_obstacle(grid, base.min_value + off, args.tol,
                             args.max_sweeps)
        payload["h0"] = base.to_json_dict()
        payload["suite"] = verify_ellipse_limit(fld).to_json_dict()
    _emit_json(payload, args.output)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    root = argparse.ArgumentParser(
        prog="abrikosov",
        description="Renormalized lattice energies, torus point "
                    "configurations, and the constant-obstacle problem.",
    )
    root.add_argument("--version", action="version", version=__version__)
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lattice", help="single-lattice energy evaluation")
    p.add_argument("--tau", type=float, nargs=2, metavar=("A", "B"),
                   help="shape modulus a + i b")
    p.add_argument("--basis", type=float, nargs=4,
                   metavar=("U1", "U2", "V1", "V2"),
                   help="lattice basis vectors u = (U1, U2), v = (V1, V2)")
    p.add_argument("--m", type=float, default=None,
                   help="density (default 1, or the basis's own density)")
    p.add_argument("--route", choices=("eta", "fourier", "zetadiff-vs"),
                   default="eta")
    p.add_argument("--ref-tau", type=float, nargs=2, metavar=("A", "B"),
                   default=(TRIANGULAR_TAU.real, TRIANGULAR_TAU.imag),
                   help="reference shape for the zetadiff-vs route")
    p.add_argument("--probes", type=float, nargs="+",
                   default=list(DEFAULT_PROBES),
                   help="decreasing probe radii for the fourier route")
    _add_series_flags(p)
    p.add_argument("--output", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("moduli-scan",
                       help="energy scan over fundamental-domain shapes")
    p.add_argument("--a-min", type=float, default=-0.5)
    p.add_argument("--a-max", type=float, default=0.5)
    p.add_argument("--b-min", type=float, default=0.8)
    p.add_argument("--b-max", type=float, default=1.6)
    p.add_argument("--resolution", type=int, default=200)
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--refine-iters", type=int, default=60)
    _add_series_flags(p)
    p.add_argument("--csv", help="write the (a, b, W) grid CSV here")
    p.add_argument("--output", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_moduli_scan)

    p = sub.add_parser("fekete",
                       help="torus point-configuration search and experiments")
    p.add_argument("--n", type=int, default=None, help="number of points")
    p.add_argument("--torus", choices=("square", "hex", "rect"),
                   default="square")
    p.add_argument("--aspect", type=float, default=math.sqrt(3.0),
                   help="side ratio of the rect torus")
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--grad-tol", type=float, default=1e-9)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--elkies", action="store_true",
                   help="run the excess-band experiment for n = 2..n-max")
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--conjecture1", action="store_true",
                   help="compare minima against the triangular reference")
    p.add_argument("--n-list", type=int, nargs="+", default=None)
    _add_series_flags(p)
    p.add_argument("--trace-csv", help="write the descent trace CSV here")
    p.add_argument("--output", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_fekete)

    p = sub.add_parser("obstacle",
                       help="constant-obstacle solves and verification suites")
    p.add_argument("--disk", action="store_true", help="unit disk domain")
    p.add_argument("--ellipse", type=float, nargs=2, metavar=("RX", "RY"))
    p.add_argument("--polygon", type=float, nargs="+",
                   metavar="C", help="flat x y pairs, counterclockwise")
    p.add_argument("--h", type=float, default=None,
                   help="grid spacing (default 1/128; 1/256 for the "
                        "scale-law and ellipse suites)")
    p.add_argument("--m", type=float, default=None, help="obstacle level")
    p.add_argument("--m-grid", type=float, nargs="+", default=None)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-sweeps", type=int, default=None)
    p.add_argument("--suite",
                   choices=("propA1", "gradient-bound", "scale-law", "ellipse"),
                   default=None)
    p.add_argument("--offsets", type=float, nargs="+", default=None,
                   help="levels above the activation threshold for the "
                        "scale-law/ellipse suites")
    p.add_argument("--field-csv", help="write the x,y,H,active grid CSV here")
    p.add_argument("--output", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_obstacle)

    return root


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
