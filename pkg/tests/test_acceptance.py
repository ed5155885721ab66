"""Acceptance gate: ten end-to-end checks with pinned tolerances.

Each test prints one PASS/FAIL line naming its criterion so the suite
doubles as a checklist.  Expensive Monte-Carlo artifacts are shared
through module-scoped fixtures; every random draw is seeded.
"""

import math
import time

import numpy as np
import pytest

from carnotx import (
    CounterexampleConfig,
    Ellipticity,
    QuadratureSpec,
    ScalarField,
    add_horizontal_quadratic,
    ball_volume,
    check_semiconvex_eigen,
    check_semiconvex_lines,
    constant_field,
    convexity_catalog,
    coordinate_field,
    counterexample_profile,
    field_from_profile,
    gauge_ball_sampler,
    gauge_quartic,
    heisenberg,
    horizontal_hessian_sym,
    horizontal_quadratic,
    isaacs_gap,
    pointwise_bound_check,
    pucci_minus,
    pucci_oracle_check,
    pucci_plus,
    radial_hessian,
    saddle_field,
    sublaplacian,
    sweep_scaling,
    verify_pucci_annihilation,
)
from carnotx.cli import run
from carnotx.rng import substream

H1 = heisenberg(1)
H2 = heisenberg(2)


def report_line(num: int, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")


@pytest.fixture(scope="module")
def million_sweep():
    """Shared d=1, alpha=1/2 sweep at production sample count."""
    cfg = CounterexampleConfig(
        d=1,
        alpha=0.5,
        eps_list=tuple(2.0**-k for k in range(3, 9)),
        q_list=(2.0, 8.0 / 3.0),
    )
    quad = QuadratureSpec(n_samples=1_000_000, seed=42)
    t0 = time.perf_counter()
    report = sweep_scaling(cfg, quad, workers=4)
    elapsed = time.perf_counter() - t0
    return report, elapsed


def test_criterion_01_radial_closed_form_matches_fd():
    """Closed-form radial Hessians agree with stencils to 1e-5 relative."""
    t0 = time.perf_counter()
    quartic = {
        "psi": lambda r: np.asarray(r, dtype=float) ** 4,
        "psi_prime": lambda r: 4.0 * np.asarray(r, dtype=float) ** 3,
        "psi_second": lambda r: 12.0 * np.asarray(r, dtype=float) ** 2,
    }
    from carnotx import RadialProfile

    cases = []
    for group, alpha in ((H1, 0.5), (H2, 0.7)):
        cfg = CounterexampleConfig(
            d=group.heisenberg_d, alpha=alpha, eps_list=(0.25,), q_list=(2.0,)
        )
        cases.append((group, RadialProfile(name="r^4", **quartic), ()))
        cases.append((group, counterexample_profile(cfg, 0.25), ((0.25, 0.05),)))

    worst = 0.0
    flat_checked = 0
    per_case = 125  # 4 cases x 125 = 500 points
    for group, profile, shells in cases:
        sampler = gauge_ball_sampler(
            group, rho_max=2.0, rho_min=0.1, min_horizontal=0.05,
            exclude_shells=shells,
        )
        pts = sampler(per_case, substream(42, "criterion-1", group.n, profile.name))
        u = field_from_profile(group, profile)
        for x in pts:
            fd = horizontal_hessian_sym(group, u, x)
            closed = radial_hessian(group, profile, x)
            rel = float(
                np.linalg.norm(fd - closed.matrix)
                / max(float(np.linalg.norm(closed.matrix)), 1e-30)
            )
            worst = max(worst, rel)
            if group is H2:
                # flat eigenvalue must show up twice among the FD eigenvalues
                fd_eigs = np.linalg.eigvalsh(fd)
                scale = max(1.0, float(np.max(np.abs(fd_eigs))))
                hits = int(
                    np.sum(np.abs(fd_eigs - closed.eigen_flat) <= 1e-5 * scale)
                )
                assert closed.flat_multiplicity == 2
                if hits >= 2:
                    flat_checked += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-5 and flat_checked == 2 * per_case and elapsed < 10.0
    report_line(
        1,
        ok,
        f"500 points, worst relative error {worst:.3g} (tol 1e-5),"
        f" double flat eigenvalue at {flat_checked}/250 points, {elapsed:.1f}s",
    )
    assert worst <= 1e-5
    assert flat_checked == 2 * per_case
    assert elapsed < 10.0


def test_criterion_02_sublaplacian_of_quartic():
    """FD trace of the quartic's Hessian equals 24 |x_H|^2 on H^1 (1e-6)."""
    u = ScalarField(name="rho4", evaluate=gauge_quartic(H1).evaluate)
    rng = substream(42, "criterion-2")
    worst = 0.0
    checked = 0
    while checked < 100:
        x = rng.uniform(-1.5, 1.5, 3)
        h2 = float(x[0] ** 2 + x[1] ** 2)
        if h2 < 0.05**2:
            continue
        want = 24.0 * h2  # symbolic oracle
        got = sublaplacian(H1, u, x)
        worst = max(worst, abs(got - want) / abs(want))
        checked += 1
    ok = worst <= 1e-6
    report_line(2, ok, f"100 points, worst relative error {worst:.3g} (tol 1e-6)")
    assert ok


def test_criterion_03_extremal_operator_suite():
    """Sampled sup, optimizer attainment, and the operator algebra at 1e-10."""
    rng = substream(42, "criterion-3")
    windows = [Ellipticity(1.0, 3.0), Ellipticity(0.5, 2.5)]
    worst_over = -np.inf
    all_attained = True
    for i in range(12):
        k = int(rng.integers(2, 6))
        raw = rng.standard_normal((k, k))
        mat = 0.5 * (raw + raw.T) * float(rng.uniform(0.5, 4.0))
        e = windows[i % 2]
        oracle_sup, formula, attained = pucci_oracle_check(
            mat, e, n_samples=10_000, seed=1000 + i
        )
        worst_over = max(worst_over, oracle_sup - formula)
        all_attained = all_attained and attained

    worst_super = -np.inf
    worst_dual = 0.0
    e = windows[0]
    for _ in range(1000):
        k = int(rng.integers(2, 6))
        a = 0.5 * (lambda r: r + r.T)(rng.standard_normal((k, k)))
        b = 0.5 * (lambda r: r + r.T)(rng.standard_normal((k, k)))
        worst_super = max(
            worst_super,
            pucci_plus(a + b, e) - pucci_plus(a, e) - pucci_plus(b, e),
        )
        worst_dual = max(worst_dual, abs(pucci_minus(a, e) + pucci_plus(-a, e)))

    raw = rng.standard_normal((4, 4))
    mat = 0.5 * (raw + raw.T)
    ys = [0.5 * (lambda r: r + r.T)(rng.standard_normal((4, 4))) for _ in range(50)]
    gap = isaacs_gap(lambda m: pucci_minus(m, e), mat, ys + [mat], e)
    gap_at_self = isaacs_gap(lambda m: pucci_minus(m, e), mat, [mat], e)

    ok = (
        worst_over <= 1e-10
        and all_attained
        and worst_super <= 1e-10
        and worst_dual <= 1e-10
        and gap >= -1e-10
        and abs(gap_at_self) <= 1e-13
    )
    report_line(
        3,
        ok,
        f"oracle excess {worst_over:.2g}, superadditivity slack {worst_super:.2g},"
        f" duality defect {worst_dual:.2g}, envelope gap {gap:.2g}",
    )
    assert ok


def test_criterion_04_counterexample_annihilation():
    """Extremal operator vanishes outside the splice and equals the source inside."""
    worst_outer = worst_inner = 0.0
    all_passed = True
    for d in (1, 2):
        for alpha in (0.3, 0.5, 0.7):
            cfg = CounterexampleConfig(
                d=d, alpha=alpha, eps_list=(2.0**-3, 2.0**-5), q_list=(2.0,)
            )
            for eps in cfg.eps_list:
                rep = verify_pucci_annihilation(
                    cfg, eps, n_samples=10_000, seed=42, tol=1e-8
                )
                all_passed = all_passed and rep.passed
                worst_outer = max(worst_outer, rep.max_outer_residual)
                worst_inner = max(worst_inner, rep.max_inner_residual)
    ok = all_passed and worst_outer <= 1e-8 and worst_inner <= 1e-8
    report_line(
        4,
        ok,
        "12 configurations x 10^4 points, residuals scaled by eps^(alpha-2):"
        f" outer {worst_outer:.2g}, inner {worst_inner:.2g} (tol 1e-8)",
    )
    assert ok


def test_criterion_05_source_mass_scaling_slope(million_sweep):
    """log-log slope of the source q-mass in eps is 1.00 +/- 0.05 at q=2."""
    report, elapsed = million_sweep
    fit = next(f for f in report.fits if f["q"] == 2.0)
    slope = fit["fitted_slope"]
    ok = abs(slope - 1.0) <= 0.05 and elapsed < 60.0
    report_line(
        5,
        ok,
        f"fitted slope {slope:.4f} vs 1.00 (tol 0.05), 10^6 samples/cell,"
        f" sweep took {elapsed:.1f}s (limit 60s)",
    )
    assert abs(slope - 1.0) <= 0.05
    assert elapsed < 60.0


def test_criterion_06_critical_exponent_blowup(million_sweep):
    """At q* = 8/3 the source norm is level while the Hessian mass diverges."""
    report, _ = million_sweep
    q_star_val = 8.0 / 3.0
    fit = next(f for f in report.fits if abs(f["q"] - q_star_val) < 1e-12)
    rows = [r for r in report.rows if abs(r.q - q_star_val) < 1e-12]
    ratio = fit["f_norm_ratio"]
    r2 = fit["r2"]
    sup_ok = all(r.u_sup <= 1.0 for r in rows)
    growing = all(
        b.hess_mass_outer > a.hess_mass_outer
        for a, b in zip(rows, rows[1:])
    )
    ok = ratio <= 1.2 and r2 >= 0.99 and sup_ok and growing
    report_line(
        6,
        ok,
        f"source norm max/min {ratio:.4f} (tol 1.2), Hessian mass affine in"
        f" log(1/eps) with R^2 {r2:.6f} (min 0.99), sup bound {sup_ok}",
    )
    assert ok


def test_criterion_07_pointwise_trace_bound():
    """Two-sided trace bound: tight case pins both sides, catalog has margin."""
    e = Ellipticity(lam=1.0, Lam=2.0)
    m = H1.m

    def box(count, rng):
        return rng.uniform(-1.0, 1.0, size=(count, 3))

    tight = pointwise_bound_check(
        H1,
        lambda mat: pucci_minus(mat, e),
        horizontal_quadratic(H1, -1.0),
        constant_field(-e.Lam * m),
        c4=1.0, e=e, sampler=box, count=1000, seed=42, tol=1e-9,
    )
    tight_ok = (
        tight.passed
        and abs(tight.lower_margin) <= 1e-9
        and abs(tight.upper_margin) <= 1e-9
    )

    # five more semiconvex supersolutions, each with strictly positive margin
    catalog = [
        (horizontal_quadratic(H1, 1.0), constant_field(3.0), "minus", 0.0,
         Ellipticity(1.0, 2.0)),
        (saddle_field(H1), constant_field(0.0), "minus", 1.2, Ellipticity(1.0, 2.0)),
        (horizontal_quadratic(H1, -0.4), constant_field(0.0), "plus", 0.5,
         Ellipticity(1.0, 2.0)),
        (gauge_quartic(H1), constant_field(30.0), "minus", 0.1, Ellipticity(0.5, 1.5)),
        (add_horizontal_quadratic(H1, coordinate_field(H1, 1), 0.3),
         constant_field(3.0), "plus", 0.05, Ellipticity(1.0, 4.0)),
    ]
    margins = []
    for idx, (u, f, kind, c4, ee) in enumerate(catalog):
        gop = (
            (lambda mat, ee=ee: pucci_minus(mat, ee))
            if kind == "minus"
            else (lambda mat, ee=ee: pucci_plus(mat, ee))
        )
        rep = pointwise_bound_check(
            H1, gop, u, f, c4=c4, e=ee, sampler=box, count=200, seed=50 + idx
        )
        margins.append(
            min(rep.lower_margin, rep.upper_margin, rep.surrogate_margin)
        )
        assert rep.passed, (u.name, rep)
    positive = all(mg > 0.0 for mg in margins)
    ok = tight_ok and positive
    report_line(
        7,
        ok,
        f"tight margins ({tight.lower_margin:.2g}, {tight.upper_margin:.2g})"
        f" within 1e-9 at 10^3 points; 5 catalog margins all positive"
        f" (smallest {min(margins):.3g})",
    )
    assert ok


def test_criterion_08_convexity_checkers_agree():
    """Line and eigenvalue verdicts coincide and survive the quadratic shift."""

    def box(count, rng):
        return rng.uniform(-1.0, 1.0, size=(count, 3))

    cases = convexity_catalog(H1)
    assert len(cases) == 6
    agreements = 0
    shift_agreements = 0
    total = 0
    for case in cases:
        for c in (0.0, 0.5, 1.0, 2.0):
            total += 1
            expected = case.threshold <= c + 1e-12
            lines = check_semiconvex_lines(
                H1, case.field, c, box, line_count=64, seed=42
            ).passed
            eigen = check_semiconvex_eigen(
                H1, case.field, c, box, point_count=64, seed=42
            ).passed
            if lines == eigen == expected:
                agreements += 1
            shifted = add_horizontal_quadratic(H1, case.field, c)
            s_lines = check_semiconvex_lines(
                H1, shifted, 0.0, box, line_count=64, seed=42
            ).passed
            s_eigen = check_semiconvex_eigen(
                H1, shifted, 0.0, box, point_count=64, seed=42
            ).passed
            if s_lines == lines and s_eigen == eigen:
                shift_agreements += 1
    ok = agreements == total == 24 and shift_agreements == total
    report_line(
        8,
        ok,
        f"verdict agreement {agreements}/{total}, shifted-field agreement"
        f" {shift_agreements}/{total} across 6 fields x 4 constants",
    )
    assert ok


def test_criterion_09_ball_volume_homogeneity():
    """Gauge-ball volume scales like r^Q within 3 standard errors."""
    details = []
    ok = True
    for group in (H1, H2):
        big_q = group.homogeneous_dimension
        quad = QuadratureSpec(n_samples=400_000, seed=42)
        unit = ball_volume(group, 1.0, quad)
        for r in (0.5, 2.0):
            est = ball_volume(group, r, quad)
            predicted = unit.value * r**big_q
            spread = math.hypot(est.stderr, unit.stderr * r**big_q)
            pull = abs(est.value - predicted) / spread
            ok = ok and pull <= 3.0
            details.append(f"h:{group.heisenberg_d} r={r}: {pull:.2f} SE")
    report_line(9, ok, "volume vs r^Q pulls: " + ", ".join(details))
    assert ok


def test_criterion_10_deterministic_reports(tmp_path):
    """Byte-identical CLI reports under 1, 4, and 16 worker threads."""
    blobs = {}
    for w in (1, 4, 16):
        out = tmp_path / f"workers-{w}.json"
        csv_out = tmp_path / f"workers-{w}.csv"
        code = run(
            [
                "counterexample",
                "--eps", "2^-3..2^-6",
                "--q", "2,8/3",
                "--samples", "5000",
                "--annihilation-samples", "1500",
                "--workers", str(w),
                "--seed", "42",
                "--out", str(out),
                "--csv", str(csv_out),
            ]
        )
        assert code == 0
        blobs[w] = (out.read_bytes(), csv_out.read_bytes())
    rerun = tmp_path / "workers-16-again.json"
    code = run(
        [
            "counterexample",
            "--eps", "2^-3..2^-6",
            "--q", "2,8/3",
            "--samples", "5000",
            "--annihilation-samples", "1500",
            "--workers", "16",
            "--seed", "42",
            "--out", str(rerun),
            "--csv", str(tmp_path / "workers-16-again.csv"),
        ]
    )
    assert code == 0
    identical = (
        blobs[1] == blobs[4] == blobs[16]
        and rerun.read_bytes() == blobs[16][0]
    )
    report_line(
        10,
        identical,
        "JSON and CSV reports byte-identical across workers 1/4/16 and a rerun",
    )
    assert identical
