"""Command line: ``run <config>``, ``oracle``, ``diagnose <config> --field``.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 a failed
acceptance check.  ``EIGSHAPE_OUTPUT_ROOT`` overrides the directory against
which relative output paths are resolved.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import ndimage

from . import artifacts
from .config import ConfigError, RunConfig, load_config
from .domain import BallSpec, GridDomain, Support, ball_inside_domain, build_box_domain
from .freeboundary import (
    boundary_points,
    circle_hausdorff,
    component_verdicts,
    density_ratio,
    dichotomy_scan,
    dim2_deficit,
    extract_boundary,
    gradient_trace,
    harmonic_replacement,
    max_gradient,
    residual_measure,
)
from .optimizer import (
    brute_force_optimal,
    default_volume_tolerance,
    lambda_volume_search,
    relaxed_descent,
    threshold,
)
from .reference import disk_eigenvalue
from .spectral import ConvergenceError, SpectralResult, smallest_eigenpair
from .variation import (
    FamilySpec,
    ball_radius_for,
    coercivity_check,
    estimate_bracket,
    ladder_errors,
    lambda_from_euler_lagrange,
    make_bump_field,
)

log = logging.getLogger("eigshape")

OUTPUT_ROOT_ENV = "EIGSHAPE_OUTPUT_ROOT"
EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 0, 2, 3, 4


@dataclass
class RunReport:
    config_echo: list
    headline: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    manifest: list = field(default_factory=list)
    status: str = "complete"
    error: Optional[str] = None
    output_dir: Optional[Path] = None
    tables: dict = field(default_factory=dict)
    solution: Optional["Solution"] = None

    @property
    def passed(self) -> bool:
        return all(c[1] for c in self.checks)

    def value(self, key):
        for k, v in self.headline:
            if k == key:
                return v
        raise KeyError(key)


def output_dir_for(cfg_dir: str) -> Path:
    p = Path(cfg_dir)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not p.is_absolute():
        p = Path(root) / p
    return p


# ---------------------------------------------------------------------------
# solve


@dataclass
class Solution:
    domain: GridDomain
    support: Support
    spectral: SpectralResult
    penalty: float
    active: bool
    history: list


def _el_ball(domain: GridDomain, cells: np.ndarray) -> BallSpec:
    """Ball around the support centroid, 1.6 equivalent radii or as large as
    the admissible region allows."""
    X, Y = domain.centers()
    n = cells.sum()
    c = (float((X * cells).sum() / n), float((Y * cells).sum() / n))
    r_eq = math.sqrt(n * domain.cell_area / math.pi)
    clearance = ndimage.distance_transform_edt(domain.mask) * domain.h
    i, j = domain.index_of(c)
    room = float(clearance[i, j]) - 3.5 * domain.h
    return BallSpec(c, min(1.6 * r_eq, room))


def solve(cfg: RunConfig, domain: GridDomain) -> Solution:
    s = cfg.solver
    h2 = domain.cell_area
    density = relaxed_descent(domain, cfg.a, c_pen=s.c_pen, steps=s.steps, seed=cfg.seed)
    history = [("relaxed", it, lam, vol, obj, density.c_pen) for it, lam, vol, obj in density.history]
    thr = threshold(density)
    sp0 = smallest_eigenpair(domain, thr, tol=s.tol, seed=cfg.seed)
    u_cells = sp0.u > 0
    vol_u = float(u_cells.sum()) * h2
    tol_vol = default_volume_tolerance(thr)
    if vol_u < cfg.a - tol_vol:
        # the eigenfunction does not fill the available volume
        return Solution(domain, Support(domain, u_cells), sp0, 0.0, False, history)
    if s.bracket is not None:
        bracket = s.bracket
    else:
        try:
            ball = _el_ball(domain, u_cells)
            phi = make_bump_field(domain, ball, "dilation")
            lam_el = lambda_from_euler_lagrange(sp0.u, u_cells, sp0.lam, phi)
        except ValueError:
            # dilations scale lambda by 1/t^2, so lambda/|Omega| is the fallback
            lam_el = sp0.lam / vol_u
        bracket = (lam_el * s.bracket_factors[0], lam_el * s.bracket_factors[1])
    for attempt in range(4):
        try:
            res = lambda_volume_search(
                domain,
                cfg.a,
                bracket,
                initial=thr,
                sweep_limit=s.sweep_limit,
                exact_volume=s.exact_volume,
            )
            break
        except ValueError as exc:
            if "straddle" not in str(exc) or attempt == 3:
                raise
            log.info("widening penalty bracket %s", bracket)
            bracket = (bracket[0] * 0.5, bracket[1] * 2.0)
    history += [("penalty", k, lam, vol, obj, lp) for k, (lp, lam, vol, obj, _) in enumerate(res.history)]
    return Solution(domain, res.support, res.spectral, res.lambda_penalty, True, history)


# ---------------------------------------------------------------------------
# diagnostics


# tables every run writes, header-only when the stage did not run
STANDARD_TABLES = {
    "history.csv": ["stage", "step", "lambda", "volume", "objective", "penalty"],
    "boundary.csv": ["x", "y", "grad"],
    "bracket.csv": ["window", "kind", "mode", "param", "side", "dvol", "dj", "ratio"],
    "density.csv": ["point", "x", "y", "r", "ratio", "ball_mass"],
    "measure.csv": ["i", "j", "x", "y", "mass", "band"],
}


@dataclass
class Tables:
    files: dict = field(default_factory=dict)

    def add(self, name, header, rows):
        self.files[name] = (list(header), [list(r) for r in rows])

    def fill_standard(self):
        for name, header in STANDARD_TABLES.items():
            self.files.setdefault(name, (header, []))


def _el_fields(domain, cells, count, seed):
    base = _el_ball(domain, cells)
    rng = np.random.default_rng(seed)
    fields = []
    for k in range(count):
        frac = 0.8 + 0.2 * k / max(count - 1, 1)
        jitter = rng.uniform(-2.0, 2.0, size=2) * domain.h
        ball = BallSpec((base.center[0] + jitter[0], base.center[1] + jitter[1]), base.radius * frac)
        mode = "dilation" if k % 3 == 0 else "random_smooth"
        fields.append((mode, ball, seed + k))
    return fields


def _ratio(x: float, ref: float) -> float:
    # a nonpositive multiplier estimate fails every comparison against it
    return x / ref if ref > 0 else float("inf")


def diagnose_solution(cfg: RunConfig, sol: Solution, headline: list, checks: list, tables: Tables):
    d = sol.domain
    h = d.h
    u = sol.spectral.u
    lam = sol.spectral.lam
    S = sol.support
    cells = u > 0
    umax = float(u.max())
    dc = cfg.diagnostics

    # Euler-Lagrange multiplier over several fields
    rows = []
    for mode, ball, fseed in _el_fields(d, cells, dc.el_fields, cfg.seed):
        try:
            phi = make_bump_field(d, ball, mode, fseed)
            est = lambda_from_euler_lagrange(u, cells, lam, phi)
        except ValueError as exc:
            log.info("skipping field %s: %s", mode, exc)
            continue
        rows.append((mode, fseed, ball.center[0], ball.center[1], ball.radius, est))
    tables.add("multiplier.csv", ["mode", "seed", "cx", "cy", "radius", "lambda_est"], rows)
    ests = np.array([r[5] for r in rows])
    lam_est = float(np.mean(ests))
    spread = _ratio(float(ests.max() - ests.min()), lam_est)
    sqrt_l = math.sqrt(max(lam_est, 0.0))
    headline += [("lambda_est", lam_est), ("lambda_est_spread", spread), ("lambda_est_fields", len(rows))]
    checks.append(("multiplier_positive", lam_est > 0, lam_est, 0.0))
    checks.append(("multiplier_spread", len(rows) >= 10 and spread <= 0.05, spread, 0.05))

    # boundary geometry and gradient trace
    trace = extract_boundary(S)
    gt = gradient_trace(u, S, trace, sqrt_l)
    verts = trace.vertices
    tables.add(
        "boundary.csv", STANDARD_TABLES["boundary.csv"], [(p[0], p[1], g) for p, g in zip(verts, gt.samples)]
    )
    perim = trace.length
    haus, center, radius = circle_hausdorff(S)
    med = gt.median
    headline += [
        ("perimeter", perim),
        ("circle_cx", float(center[0])),
        ("circle_cy", float(center[1])),
        ("circle_r", radius),
        ("circle_hausdorff", haus),
        ("grad_median", med),
    ]
    checks.append(("gradient_vs_sqrt_lambda", abs(_ratio(med, sqrt_l) - 1) <= 0.10, _ratio(med, sqrt_l) - 1, 0.10))
    lip = max_gradient(u, S)
    checks.append(("lipschitz_proxy", _ratio(lip, sqrt_l) <= 3.0, _ratio(lip, sqrt_l), 3.0))

    # residual measure
    rm = residual_measure(u, S, lam)
    tol_neg = 1e-8 * lam * umax * h * h
    inner = S.cells & ~rm.band
    interior_max = float(np.abs(rm.masses[inner]).max()) if inner.any() else 0.0
    band_frac = rm.boundary_band_mass / rm.total_mass
    mpp = rm.total_mass / perim
    idx = np.argwhere(rm.masses != 0)
    X, Y = d.centers()
    tables.add(
        "measure.csv",
        STANDARD_TABLES["measure.csv"],
        [(i, j, X[i, j], Y[i, j], rm.masses[i, j], bool(rm.band[i, j])) for i, j in idx],
    )
    headline += [
        ("measure_total", rm.total_mass),
        ("measure_band_fraction", band_frac),
        ("measure_min", float(rm.masses.min())),
        ("measure_interior_max", interior_max),
        ("mass_per_perimeter", mpp),
    ]
    checks.append(("measure_nonnegative", float(rm.masses.min()) >= -tol_neg, float(rm.masses.min()), -tol_neg))
    tol_int = 1e-6 * lam * umax * h * h
    checks.append(("interior_residual", interior_max <= tol_int, interior_max, tol_int))
    checks.append(("band_concentration", band_frac >= 0.99, band_frac, 0.99))
    checks.append(("mass_per_perimeter", abs(_ratio(mpp, sqrt_l) - 1) <= 0.15, _ratio(mpp, sqrt_l) - 1, 0.15))

    # density ratios and ball masses at boundary samples
    pts = boundary_points(trace, dc.boundary_samples)
    rows = []
    for k, p in enumerate(pts):
        for rc in dc.density_radii:
            r = rc * h
            try:
                ratio = density_ratio(S, p, r)
            except ValueError:
                continue
            rows.append((k, p[0], p[1], r, ratio, rm.ball_mass(p, r)))
    tables.add("density.csv", STANDARD_TABLES["density.csv"], rows)
    ratios = np.array([r[4] for r in rows])
    in_window = float(np.mean((ratios >= 0.05) & (ratios <= 0.95))) if len(ratios) else 0.0
    headline += [("density_min", float(ratios.min())), ("density_max", float(ratios.max()))]
    checks.append(("density_window", in_window == 1.0, in_window, 1.0))

    # penalty bracket from the dilation ladder and truncations
    ball = _el_ball(d, cells)
    fam = FamilySpec(ball, truncation_eps=tuple(umax * f for f in (0.05, 0.1, 0.2)))
    rows = []
    finest, monotone, ref = [], True, float("nan")
    for w in dc.bracket_windows:
        try:
            be = estimate_bracket(d, u, cells, lam, w, fam, seed=cfg.seed)
        except ValueError as exc:
            log.info("bracket window %r: %s", w, exc)
            continue
        for kind, mode, param, side, dv, dj, ratio in be.ratios:
            rows.append((w, kind, mode, param, side, dv, dj, ratio))
        ref = be.lambda_ref
        for side, errs in ladder_errors(be).items():
            finest.append(errs[-1][1])
            monotone &= all(b[1] <= a[1] for a, b in zip(errs, errs[1:]))
        headline += [(f"mu_minus_ub[{w!r}]", be.mu_minus_ub), (f"mu_plus_lb[{w!r}]", be.mu_plus_lb)]
    tables.add("bracket.csv", STANDARD_TABLES["bracket.csv"], rows)
    finest_err = max(finest) if finest else float("inf")
    headline.append(("bracket_lambda_ref", ref))
    checks.append(("bracket_convergence", finest_err <= 0.15, finest_err, 0.15))
    checks.append(("bracket_monotone", bool(finest) and monotone, monotone, True))

    # dichotomy along inward normals at a few boundary points
    c_in = np.array(center)
    rows = []
    for p in pts[:: max(1, len(pts) // 4)][:4]:
        n = (c_in - p) / np.linalg.norm(c_in - p)
        centers = [p + s * h * n for s in range(-12, 13)]
        for rc in dc.dichotomy_radii:
            ok = [c for c in centers if ball_inside_domain(d, BallSpec(tuple(c), rc * h))]
            for rec in dichotomy_scan(d, u, [rc * h], ok, sqrt_l):
                off = float(np.dot(np.array(rec.center) - p, n) / h)
                rows.append((p[0], p[1], off, rec.r, rec.average, rec.verdict, rec.contradiction))
    tables.add("dichotomy.csv", ["bx", "by", "offset", "r", "average", "verdict", "contradiction"], rows)
    contradictions = sum(1 for r in rows if r[6])
    headline.append(("dichotomy_contradictions", contradictions))
    checks.append(("dichotomy_soundness", contradictions == 0, contradictions, 0))

    # deficit at boundary points
    rows = []
    radii = [rc * h for rc in dc.dim2_radii]
    for k, p in enumerate(pts[:8]):
        for r, v in zip(radii, dim2_deficit(d, u, S, lam_est, p, radii)):
            rows.append((k, p[0], p[1], r, _ratio(v, lam_est)))
    tables.add("dim2.csv", ["point", "x", "y", "r", "deficit_over_lambda"], rows)

    # coercivity and harmonic replacement near the first boundary sample
    p0 = tuple(float(c) for c in pts[0])
    try:
        R = ball_radius_for(d, p0, lam, 0.25 * radius)
        rep = coercivity_check(d, u, lam, BallSpec(p0, R), dc.coercivity_trials, cfg.seed)
        tables.add("coercivity.csv", ["trial", "margin"], list(enumerate(rep.margins)))
        headline += [("coercivity_c", rep.c_explicit), ("coercivity_violations", rep.violations)]
        checks.append(("coercivity", rep.violations == 0, rep.violations, 0))
        v = harmonic_replacement(d, u, BallSpec(p0, R), lam)
        inside = np.hypot(X - p0[0], Y - p0[1]) < R - h
        vmin = float(v[inside].min())
        headline.append(("replacement_min", vmin))
        checks.append(("replacement_positive", vmin > 0, vmin, 0.0))
    except ValueError as exc:
        log.info("coercivity skipped: %s", exc)
    return lam_est


def _components(sol: Solution, headline, checks, tables):
    verdicts = component_verdicts(sol.domain, sol.spectral.u)
    tables.add(
        "components.csv",
        ["component", "cells", "verdict", "max_u"],
        [(v.component, v.cells, v.verdict, v.max_u) for v in verdicts],
    )
    for v in verdicts:
        headline.append((f"component[{v.component}]", v.verdict))


# ---------------------------------------------------------------------------
# report


def render_report(report: RunReport) -> str:
    lines = [f"status = {report.status}"]
    if report.error:
        lines.append(f"error = {report.error}")
    lines.append("")
    lines.append("[config]")
    lines += report.config_echo
    lines.append("")
    lines.append("[headline]")
    lines += [f"{k} = {artifacts._cell(v)}" for k, v in report.headline]
    lines.append("")
    lines.append("[checks]")
    for name, ok, value, limit in report.checks:
        lines.append(f"{'PASS' if ok else 'FAIL'} {name} value={artifacts._cell(value)} limit={artifacts._cell(limit)}")
    lines.append("")
    lines.append("[manifest]")
    lines += [f"{name} {size} sha256:{digest}" for name, size, digest in report.manifest]
    lines.append("report.txt (this file)")
    return "\n".join(lines) + "\n"


def _write_outputs(out: Path, report: RunReport, tables: Tables, rasters: dict):
    tables.fill_standard()
    report.tables = tables.files
    for name, (field_, maxval) in rasters.items():
        artifacts.write_pgm(out / name, field_, maxval)
    for name, (header, rows) in tables.files.items():
        artifacts.write_csv(out / name, header, rows)
    artifacts.write_csv(out / "summary.csv", ["key", "value"], report.headline)
    artifacts.write_csv(out / "checks.csv", ["check", "passed", "value", "limit"], report.checks)
    report.manifest = artifacts.manifest(out, exclude=("report.txt", artifacts.DirectoryLock.NAME))
    (out / "report.txt").write_bytes(render_report(report).encode("utf-8"))


def run_experiment(cfg: RunConfig, out_dir: Optional[Path] = None) -> RunReport:
    """Solve, diagnose and write every artifact into the output directory."""
    out = output_dir_for(cfg.output_dir) if out_dir is None else Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport(config_echo=cfg.echo(), output_dir=out)
    tables = Tables()
    rasters = {}
    with artifacts.DirectoryLock(out):
        for p in out.iterdir():
            if p.is_file() and p.name != artifacts.DirectoryLock.NAME:
                p.unlink()
        try:
            d = build_box_domain(cfg.domain.rects, cfg.domain.h, cfg.domain.anchor)
            sol = solve(cfg, d)
            report.solution = sol
            u = sol.spectral.u
            rasters = {"solution.pgm": (u, 65535), "support.pgm": (sol.support.cells, 255)}
            tables.add("history.csv", STANDARD_TABLES["history.csv"], sol.history)
            vol_u = float((u > 0).sum()) * d.cell_area
            report.headline += [
                ("lambda_a", sol.spectral.lam),
                ("volume", sol.support.volume),
                ("volume_u", vol_u),
                ("penalty", sol.penalty),
                ("constraint_active", sol.active),
                ("lambda_over_disk", sol.spectral.lam / disk_eigenvalue(cfg.a)),
            ]
            _components(sol, report.headline, report.checks, tables)
            if sol.active:
                tol = default_volume_tolerance(sol.support)
                dv = abs(sol.support.volume - cfg.a)
                report.checks.append(("volume_tolerance", dv <= tol, dv, tol))
                if cfg.diagnostics.enabled:
                    diagnose_solution(cfg, sol, report.headline, report.checks, tables)
            else:
                report.checks.append(("inactive_volume_below_a", vol_u < cfg.a, vol_u, cfg.a))
        except (ValueError, RuntimeError) as exc:
            report.status = "incomplete"
            report.error = f"{type(exc).__name__}: {exc}"
            _write_outputs(out, report, tables, rasters)
            raise
        _write_outputs(out, report, tables, rasters)
    return report


# ---------------------------------------------------------------------------
# oracle suite


def oracle_domain(n: int, m: int, h: float = 0.25) -> GridDomain:
    """n x m admissible block inside a one-cell Dirichlet rim."""
    mask = np.zeros((n + 2, m + 2), dtype=bool)
    mask[1:-1, 1:-1] = True
    return GridDomain.from_mask(mask, h)


ORACLE_HEADER = ["n", "m", "a_cells", "lambda_enum", "lambda_search", "rel_err", "match"]


def run_oracle_suite(max_grid: int = 5, max_cells: int = 6, h: float = 0.25) -> RunReport:
    """Enumeration vs penalty search for every n x m block with
    1 <= n <= m <= max_grid and every 1 <= a_cells <= min(max_cells, n m).
    The comparison table is ``report.tables["oracle.csv"]``."""
    report = RunReport(
        config_echo=[f"max_grid = {max_grid}", f"max_cells = {max_cells}", f"h = {h!r}"]
    )
    rows = []
    for n in range(1, max_grid + 1):
        for m in range(n, max_grid + 1):
            d = oracle_domain(n, m, h)
            for k in range(1, min(max_cells, n * m) + 1):
                bf = brute_force_optimal(d, k)
                if k == n * m:
                    lam_s = smallest_eigenpair(d, d.full_support()).lam
                else:
                    res = lambda_volume_search(
                        d, k * h * h, (1e-3, 1e9), tol_vol=0.0, exact_volume=True
                    )
                    lam_s = res.spectral.lam
                err = abs(lam_s - bf.spectral.lam) / bf.spectral.lam
                ok = err <= 1e-8
                rows.append((n, m, k, bf.spectral.lam, lam_s, err, ok))
                report.checks.append((f"oracle[{n}x{m},{k}]", ok, err, 1e-8))
    report.tables["oracle.csv"] = (ORACLE_HEADER, rows)
    report.headline += [
        ("cases", len(rows)),
        ("mismatches", sum(1 for r in rows if not r[6])),
        ("max_rel_err", max(r[5] for r in rows)),
    ]
    return report


# ---------------------------------------------------------------------------
# entry point


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    t0 = time.perf_counter()
    report = run_experiment(cfg, Path(args.out) if args.out else None)
    log.info("run finished in %.1f s", time.perf_counter() - t0)
    for k, v in report.headline:
        print(f"{k} = {artifacts._cell(v)}")
    for name, ok, *_ in report.checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if report.passed else EXIT_CHECK


def _cmd_oracle(args) -> int:
    t0 = time.perf_counter()
    report = run_oracle_suite(args.max_grid, args.max_cells)
    data = artifacts.csv_bytes(*report.tables["oracle.csv"])
    if args.out:
        out = output_dir_for(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with artifacts.DirectoryLock(out):
            (out / "oracle.csv").write_bytes(data)
    sys.stdout.write(data.decode())
    log.info("oracle suite finished in %.1f s", time.perf_counter() - t0)
    return EXIT_OK if report.passed else EXIT_CHECK


def _cmd_diagnose(args) -> int:
    cfg = load_config(args.config)
    d = build_box_domain(cfg.domain.rects, cfg.domain.h, cfg.domain.anchor)
    u0 = artifacts.read_pgm(args.field)
    if u0.shape != d.shape:
        raise ConfigError(f"field shape {u0.shape} does not match domain {d.shape}")
    support = Support(d, (u0 > 0) & d.mask)
    sp = smallest_eigenpair(d, support, tol=cfg.solver.tol, x0=u0, seed=cfg.seed)
    sol = Solution(d, support, sp, float("nan"), True, [])
    out = Path(args.out) if args.out else output_dir_for(cfg.output_dir) / "diagnose"
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport(config_echo=cfg.echo(), output_dir=out)
    tables = Tables()
    with artifacts.DirectoryLock(out):
        report.headline += [("lambda_a", sp.lam), ("volume", support.volume)]
        _components(sol, report.headline, report.checks, tables)
        diagnose_solution(cfg, sol, report.headline, report.checks, tables)
        _write_outputs(out, report, tables, {})
    for name, ok, *_ in report.checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if report.passed else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eigshape", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="solve and diagnose one configuration")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("oracle", help="enumeration vs search on small grids")
    p.add_argument("--max-grid", type=int, default=5)
    p.add_argument("--max-cells", type=int, default=6)
    p.add_argument("--out", help="directory for oracle.csv")
    p.set_defaults(func=_cmd_oracle)
    p = sub.add_parser("diagnose", help="diagnostics for a stored solution field")
    p.add_argument("config")
    p.add_argument("--field", required=True, help="solution.pgm from a previous run")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_diagnose)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError, ConvergenceError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
