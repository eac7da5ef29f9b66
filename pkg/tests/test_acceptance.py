"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``.  Every tolerance is fixed
here; the statistical criteria use seeded streams, so outcomes are
reproducible bit for bit.
"""

import itertools
import math

import numpy as np

from conftest import brute_force_covariance, random_symmetric
from privcov import (
    DataMatrix,
    PrivacyBudget,
    RngStream,
    SymmetricMatrix,
    covariance,
    eig_sym,
    laplace_perturb,
    wishart_perturb,
)
from privcov.audit import (
    l1_sensitivity_bracket,
    nuclear_grid_search_2d,
    nuclear_sensitivity_check,
    privacy_ratio_audit,
    TailBoundParams,
    tail_bound_audit,
)
from privcov.cli import main
from privcov.utility import (
    CloseApproxParams,
    axis_aligned_dataset,
    close_approx_audit,
    linear_regression_r2,
    loglog_slope,
    low_rank_error_audit,
    subspace_closeness_audit,
)


def check(num, name, ok, detail):
    print(f"[criterion {num:>2}] {'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"criterion {num} ({name}) failed: {detail}"


def sub_unit_data(seed, d, n):
    gen = np.random.default_rng(seed)
    pts = gen.standard_normal((d, n))
    pts /= np.maximum(np.linalg.norm(pts, axis=0), 1.0)
    return DataMatrix(pts)


def test_criterion_01_psd_preservation():
    cells = list(itertools.product((2, 8, 32), (10, 1000), (0.1, 1.0)))
    per_cell = math.ceil(10_000 / len(cells))
    runs = 0
    worst = 0.0
    for idx, (d, n, eps) in enumerate(cells):
        X = sub_unit_data(100 + idx, d, n)
        budget = PrivacyBudget(eps)
        for t in range(per_cell):
            rep = wishart_perturb(X, budget, RngStream(1000 + idx, t))
            runs += 1
            worst = min(worst, rep.min_output_eigenvalue)
    check(
        1,
        "PSD preservation",
        worst >= -1e-10,
        f"{runs} wishart runs, min output eigenvalue {worst:.3e} (floor -1e-10)",
    )


def test_criterion_02_privacy_ratio():
    worst_ratio = worst_bound = 0.0
    violations = 0
    ok = True
    for idx, (eps, d) in enumerate(itertools.product((0.1, 1.0), (2, 4, 8))):
        report = privacy_ratio_audit(10_000, d, 50, eps, RngStream(2000 + idx, 0))
        ok = ok and report.passed
        ok = ok and report.max_abs_log_ratio <= eps + 1e-9
        ok = ok and report.max_von_neumann_bound <= eps + 1e-9
        worst_ratio = max(worst_ratio, report.max_abs_log_ratio / eps)
        worst_bound = max(worst_bound, report.max_von_neumann_bound / eps)
        violations += report.support_violations
    check(
        2,
        "privacy ratio",
        ok,
        f"max |log ratio| = {worst_ratio:.4f} eps, max VN bound = {worst_bound:.4f} eps, "
        f"support violations counted: {violations}",
    )


def test_criterion_03_nuclear_sensitivity():
    worst = nuclear_sensitivity_check(100_000, 8, 11, RngStream(3000, 0))
    grid = nuclear_grid_search_2d(0.01)
    ok = worst <= 3.0 + 1e-9 and grid >= 2.0
    check(
        3,
        "nuclear sensitivity",
        ok,
        f"max n||Delta||* = {worst:.6f} (bound 3), d=2 grid attains {grid:.6f} (need >= 2)",
    )


def test_criterion_04_l1_bracket():
    ok = True
    details = []
    for d in (2, 3):
        res = l1_sensitivity_bracket(d, 1)
        inside = res.lemma_lower < res.lower_estimate < res.lemma_upper
        construction_ok = res.construction_value >= res.lemma_lower
        ok = ok and inside and construction_ok
        details.append(f"d={d}: estimate {res.lower_estimate:.4f} in ({d}, {2*d})")
    check(4, "l1 sensitivity bracket", ok, "; ".join(details))


def test_criterion_05_tail_bound():
    params = TailBoundParams(dim=10, dof=11.0, scale_eigenvalue=1.0, theta=5.0)
    report = tail_bound_audit(params, 10_000, RngStream(5000, 0))
    se = math.sqrt(report.bound_probability * (1 - report.bound_probability) / report.trials)
    check(
        5,
        "wishart tail bound",
        report.passed,
        f"exceedance {report.frequency:.5f} <= {report.bound_probability:.5f} + 3*{se:.5f}",
    )


def test_criterion_06_noise_magnitude_ordering():
    ds = (8, 16, 32, 64, 128)
    n, eps, trials = 1000, 1.0, 200
    budget = PrivacyBudget(eps)
    med_w, med_l = [], []
    ordering = True
    for d in ds:
        X = sub_unit_data(600 + d, d, n)
        w_norms = [
            wishart_perturb(X, budget, RngStream(6000 + d, t)).noise_spectral_norm
            for t in range(trials)
        ]
        l_norms = [
            laplace_perturb(X, budget, RngStream(6500 + d, t)).noise_spectral_norm
            for t in range(trials)
        ]
        med_w.append(float(np.median(w_norms)))
        med_l.append(float(np.median(l_norms)))
        ordering = ordering and med_w[-1] < med_l[-1]
    slope_w = loglog_slope(ds, med_w)
    slope_l = loglog_slope(ds, med_l)
    ok = ordering and 0.9 <= slope_w <= 1.35 and 1.35 <= slope_l <= 1.65
    check(
        6,
        "noise magnitude ordering",
        ok,
        f"wishart < laplace at every d: {ordering}; slopes wishart {slope_w:.3f} in "
        f"[0.9, 1.35], laplace {slope_l:.3f} in [1.35, 1.65]",
    )


def test_criterion_07_subspace_closeness():
    X = axis_aligned_dataset((0.35, 0.25, 0.17, 0.07, 0.06, 0.04, 0.03, 0.03), 2000)
    ok = True
    details = []
    for k in (1, 3):
        results = subspace_closeness_audit(X, k, 2.0, 1000, RngStream(7000 + k, 0))
        qualifying = [r for r in results if r.gap_condition_met]
        holds = all(r.projector_distance_F <= r.bound + 1e-8 for r in qualifying)
        ok = ok and holds and len(qualifying) > 0
        details.append(
            f"k={k}: {len(qualifying)}/{len(results)} qualifying, bound holds on all: {holds}"
        )
    check(7, "top-k subspace closeness", ok, "; ".join(details))


def test_criterion_08_sample_complexity():
    params = CloseApproxParams(rho=0.75, eta=0.1, spectrum_gap=0.5)
    report = close_approx_audit(2, 1.0, params, 1000, RngStream(8000, 0))
    ok = report.meets_sample_bound and report.rate >= report.required_rate
    check(
        8,
        "sample complexity",
        ok,
        f"n = {report.n} >= n* = {report.n_star:.1f}, success rate {report.rate:.3f} "
        f">= {report.required_rate:.3f}",
    )


def test_criterion_09_low_rank_error():
    # per-trial bound at a fixed dimension
    X16 = axis_aligned_dataset((0.4, 0.3, 0.2, 0.1) + (0.0,) * 12, 200)
    fixed = low_rank_error_audit(X16, 2, 1.0, 1000, RngStream(9000, 0))
    per_trial_ok = fixed.bound_violations == 0
    # growth of the median excess across the dimension sweep
    ds = (8, 16, 32, 64, 128)
    med_excess = []
    for d in ds:
        fr = 0.6 ** np.arange(d)
        X = axis_aligned_dataset(fr / fr.sum(), 200)
        rep = low_rank_error_audit(X, 2, 1.0, 150, RngStream(9100 + d, 0))
        per_trial_ok = per_trial_ok and rep.bound_violations == 0
        med_excess.append(rep.median_excess)
    x = [d * math.log(d) for d in ds]
    _, _, r2 = linear_regression_r2(x, med_excess)
    ok = per_trial_ok and r2 >= 0.9
    check(
        9,
        "low-rank approximation error",
        ok,
        f"bound violations 0: {per_trial_ok}; excess-vs-(d ln d) regression R^2 = {r2:.4f}",
    )


def test_criterion_10_determinism_and_covariance_oracle(tmp_path):
    # byte-identical CLI artifacts under a fixed config
    csv_path = tmp_path / "pts.csv"
    gen = np.random.default_rng(1010)
    pts = gen.standard_normal((40, 6))
    pts /= np.maximum(np.linalg.norm(pts, axis=1, keepdims=True), 1.0)
    csv_path.write_text("\n".join(",".join(repr(float(v)) for v in row) for row in pts) + "\n")
    outputs = []
    for tag in ("a", "b"):
        out = tmp_path / f"cov-{tag}.mat"
        code = main(
            ["perturb", "--input", str(csv_path), "--mechanism", "wishart",
             "--epsilon", "0.5", "--seed", "99", "--stream", "7",
             "--output", str(out), "--report", str(tmp_path / f"rep-{tag}.json")]
        )
        assert code == 0
        outputs.append(out.read_bytes())
    identical = outputs[0] == outputs[1]

    worst = 0.0
    for i in range(100):
        X = sub_unit_data(10_000 + i, 5, 30)
        got = covariance(X, "mean").to_array()
        worst = max(worst, float(np.abs(got - brute_force_covariance(X.points)).max()))
    ok = identical and worst <= 1e-12
    check(
        10,
        "determinism and covariance oracle",
        ok,
        f"byte-identical outputs: {identical}; max |covariance - brute force| = {worst:.2e}",
    )


def test_criterion_11_eigensolver():
    gen = np.random.default_rng(1111)
    rec_ok = orth_ok = True
    for _ in range(1000):
        d = int(gen.integers(1, 65))
        a = random_symmetric(gen, d, scale=2.0)
        e = eig_sym(a)
        arr = a.to_array()
        rec = np.linalg.norm(arr - e.eigenvectors @ np.diag(e.eigenvalues) @ e.eigenvectors.T)
        rec_ok = rec_ok and rec <= 1e-8 * max(1.0, np.linalg.norm(arr))
        orth = np.linalg.norm(e.eigenvectors.T @ e.eigenvectors - np.eye(d))
        orth_ok = orth_ok and orth <= 1e-10 * d
    roots_ok = True
    for _ in range(200):
        d = int(gen.integers(2, 4))
        arr = random_symmetric(gen, d).to_array()
        if d == 2:
            coeffs = [1.0, -np.trace(arr), np.linalg.det(arr)]
        else:
            minors = sum(
                arr[i, i] * arr[j, j] - arr[i, j] * arr[j, i]
                for i, j in itertools.combinations(range(3), 2)
            )
            coeffs = [1.0, -np.trace(arr), minors, -np.linalg.det(arr)]
        roots = np.sort(np.roots(coeffs).real)[::-1]
        got = eig_sym(SymmetricMatrix(arr)).eigenvalues
        roots_ok = roots_ok and bool(np.abs(got - roots).max() <= 1e-8)
    ok = rec_ok and orth_ok and roots_ok
    check(
        11,
        "eigensolver residuals",
        ok,
        f"reconstruction: {rec_ok}, orthogonality: {orth_ok}, char-poly roots (d<=3): {roots_ok}",
    )
