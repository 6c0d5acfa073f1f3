"""Acceptance criteria 1-11.  Each test prints one ``criterion NN: PASS/FAIL``
line; the lines are collected again in the terminal summary."""

import math
import time

import numpy as np

from eigshape.cli import run_experiment, run_oracle_suite
from eigshape.config import parse_config
from eigshape.domain import BallSpec, build_box_domain
from eigshape.freeboundary import circle_hausdorff, extract_boundary, gradient_trace, residual_measure
from eigshape.reference import disk_boundary_gradient, disk_eigenvalue, disk_multiplier
from eigshape.spectral import smallest_eigenpair
from eigshape.variation import (
    ball_radius_for,
    coercivity_check,
    first_order_remainders,
    make_bump_field,
)

from conftest import FK_CONFIG, record

APPENDIX_CONFIG = """\
domain.rects = 0,1,0,1; 1.5,2.1,0,0.6
domain.h = 0.025
a = 1.05
seed = 0
"""


def test_criterion_01_faber_krahn(fk_run):
    sol = fk_run.solution
    lam = sol.spectral.lam
    err = lam / disk_eigenvalue(0.2) - 1
    haus, _, _ = circle_hausdorff(sol.support)
    h = sol.domain.h
    ok = abs(err) <= 0.03 and haus <= 2 * h and fk_run.elapsed <= 180
    record(1, ok, f"lambda={lam:.4f} err={err:+.4f} hausdorff={haus / h:.2f}h time={fk_run.elapsed:.1f}s")
    assert ok


def test_criterion_02_free_boundary_gradient(fk_run):
    sol = fk_run.solution
    lam_est = fk_run.value("lambda_est")
    tr = gradient_trace(sol.spectral.u, sol.support, extract_boundary(sol.support), math.sqrt(lam_est))
    med = tr.median
    e1 = med / math.sqrt(lam_est) - 1
    e2 = med / disk_boundary_gradient(0.2) - 1
    ok = abs(e1) <= 0.10 and abs(e2) <= 0.10
    record(2, ok, f"median={med:.3f} vs sqrt(Lambda_est) {e1:+.4f} vs disk {e2:+.4f}")
    assert ok


def test_criterion_03_multiplier(fk_run):
    _, rows = fk_run.tables["multiplier.csv"]
    ests = np.array([r[-1] for r in rows], dtype=float)
    spread = (ests.max() - ests.min()) / ests.mean()
    err = ests.mean() / disk_multiplier(0.2) - 1
    ok = len(ests) >= 10 and spread <= 0.05 and abs(err) <= 0.10
    record(3, ok, f"fields={len(ests)} mean={ests.mean():.2f} spread={spread:.4f} err={err:+.4f}")
    assert ok


def test_criterion_04_penalty_bracket(fk_run):
    lam_est = fk_run.value("lambda_est")
    ref = fk_run.value("bracket_lambda_ref")
    _, rows = fk_run.tables["bracket.csv"]
    window = rows[0][0]
    ok = lam_est > 0
    parts = []
    for side in (-1, 1):
        ladder = sorted(
            ((abs(r[3]), r[7]) for r in rows if r[0] == window and r[1] == "transport" and r[4] == side),
            reverse=True,
        )
        errs = [abs(ratio / ref - 1) for _, ratio in ladder]
        finest_vs_mean = abs(ladder[-1][1] / lam_est - 1)
        ok &= len(errs) >= 3 and errs[-1] <= 0.15 and finest_vs_mean <= 0.15
        ok &= all(b <= a for a, b in zip(errs, errs[1:]))
        parts.append(f"side {side:+d}: finest err={errs[-1]:.1e} (vs mean {finest_vs_mean:.1e})")
    record(4, ok, f"Lambda_est={lam_est:.2f} " + " ".join(parts))
    assert ok


def test_criterion_05_brute_force():
    t0 = time.perf_counter()
    report = run_oracle_suite(max_grid=5, max_cells=6)
    elapsed = time.perf_counter() - t0
    cases = report.value("cases")
    worst = report.value("max_rel_err")
    ok = report.passed and elapsed <= 60
    record(5, ok, f"cases={cases} mismatches={report.value('mismatches')} max_err={worst:.1e} time={elapsed:.1f}s")
    assert ok


def test_criterion_06_appendix(tmp_path):
    cfg = parse_config(APPENDIX_CONFIG)
    report = run_experiment(cfg, tmp_path)
    sol = report.solution
    u = sol.spectral.u
    d = sol.domain
    small = d.component_id == 1
    big_lam = smallest_eigenpair(d, d.full_support()).per_component[0]
    vol_u = float((u > 0).sum()) * d.cell_area
    err = sol.spectral.lam / big_lam - 1
    ok = u[small].max() < 1e-6 * u.max() and abs(err) <= 0.03 and vol_u < cfg.a
    record(6, ok, f"max u small={u[small].max():.1e} lambda err={err:+.2e} |Omega_u|={vol_u:.4f} < {cfg.a}")
    assert ok


def test_criterion_07_residual_measure(fk_run):
    sol = fk_run.solution
    u, S, lam = sol.spectral.u, sol.support, sol.spectral.lam
    m = residual_measure(u, S, lam)
    scale = lam * u.max() * S.domain.h ** 2
    interior = float(np.max(np.abs(m.masses[m.interior]))) / scale
    frac = m.boundary_band_mass / m.total_mass
    mpp = m.total_mass / extract_boundary(S).length / math.sqrt(fk_run.value("lambda_est")) - 1
    ok = interior <= 1e-6 and frac >= 0.99 and abs(mpp) <= 0.15
    record(7, ok, f"interior={interior:.1e} band fraction={frac:.4f} mass/perimeter err={mpp:+.4f}")
    assert ok


def test_criterion_08_density_window(fk_run):
    _, rows = fk_run.tables["density.csv"]
    h = fk_run.solution.domain.h
    ratios = np.array([r[4] for r in rows if 4 * h - 1e-12 <= r[3] <= 16 * h + 1e-12])
    inside = np.mean((ratios >= 0.05) & (ratios <= 0.95))
    radii = sorted({round(r[3] / h) for r in rows})
    ok = len(ratios) > 0 and inside == 1.0 and radii == [4, 8, 16]
    record(8, ok, f"samples={len(ratios)} in window={inside:.3f} range=[{ratios.min():.3f}, {ratios.max():.3f}]")
    assert ok


def test_criterion_09_coercivity(fk_run):
    sol = fk_run.solution
    d, u, lam = sol.domain, sol.spectral.u, sol.spectral.lam
    center = (0.75, 0.5)
    R = ball_radius_for(d, center, lam, 0.2)
    rep = coercivity_check(d, u, lam, BallSpec(center, R), trial_count=100, seed=0)
    ok = rep.violations == 0 and len(rep.margins) == 100
    record(9, ok, f"trials=100 violations={rep.violations} C={rep.c_explicit:.3f} R={R:.4f}")
    assert ok


def test_criterion_10_numerical_hygiene(fk_run):
    sol = fk_run.solution
    phi = make_bump_field(sol.domain, BallSpec((0.5, 0.5), 0.4), "dilation")
    t0 = 0.45 / phi.jac_bound
    ts = [t0 * 2.0**-k for k in range(2, 7)]
    rem = first_order_remainders(sol.spectral.u, sol.support.cells, sol.spectral.lam, phi, ts)
    ratios = rem[:-1] / rem[1:]
    errs = []
    for n in (16, 32, 64, 128):
        d = build_box_domain([(0, 1, 0, 1)], 1 / n, anchor="node")
        errs.append(abs(smallest_eigenpair(d, d.full_support()).lam - 2 * math.pi**2))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    ok = bool(np.all(ratios >= 3)) and all(abs(p - 2) <= 0.1 for p in orders)
    record(10, ok, f"remainder ratios min={ratios.min():.2f} refinement orders={[round(p, 3) for p in orders]}")
    assert ok


def test_criterion_11_determinism(fk_run, tmp_path):
    run_experiment(parse_config(FK_CONFIG), tmp_path)
    first = fk_run.output_dir
    names = sorted(p.name for p in first.iterdir() if p.suffix in (".csv", ".pgm"))
    same = [(tmp_path / n).read_bytes() == (first / n).read_bytes() for n in names]
    ok = len(names) > 0 and all(same)
    record(11, ok, f"files={len(names)} identical={sum(same)}")
    assert ok
