"""End-to-end checks of the package's headline guarantees.

Each test verifies one user-facing claim at its stated tolerance and asserts
its own runtime budget, so the verbose run reads as a pass/fail scorecard.
"""
import json
import math
import time

import numpy as np
import pytest

from varfun import (
    TARGET_ONES,
    DomainSpec,
    FullSpace,
    LinearSpan,
    Rank1Cone,
    Shift,
    check_hausdorff_rates,
    check_manifold_projection,
    check_tangent_projection,
    circle_chart,
    dense_tensor,
    draw_samples,
    eval_function,
    klimit_check,
    legendre_tensor_basis,
    make_rng,
    normalization_defect,
    optimal_weight,
    parabola_chart,
    phase_diagram,
    quasi_opt_check,
    rank1_tensor,
    reach_perturbation_check,
    rip_delta_linear,
    rip_delta_mc,
    rip_probability,
    solve_iht_rank1,
    standard_grid,
    uniform_weight,
    variation_estimate,
    variation_exact,
    variation_norms,
)


def test_01_span_variation_norms_match_dimension():
    start = time.perf_counter()
    for d in range(1, 16):
        report = variation_norms(variation_exact(FullSpace(legendre_tensor_basis((d,)))))
        assert report.sup_norm == pytest.approx(d**2, abs=1e-9)
        assert report.l1_norm == pytest.approx(d, abs=1e-8)
    assert time.perf_counter() - start < 1.0


def test_02_optimal_weight_flattens_variation_and_normalizes():
    start = time.perf_counter()
    grid = standard_grid(1)
    for d in range(1, 16):
        k = variation_exact(FullSpace(legendre_tensor_basis((d,))))
        weight = optimal_weight(k)
        np.testing.assert_allclose(weight.evaluate(grid) * k(grid), float(d), atol=1e-8)
        assert normalization_defect(weight) < 1e-8
    assert time.perf_counter() - start < 1.0


def test_03_per_mode_kernel_maximizer_attains_product_variation():
    start = time.perf_counter()
    for order in (2, 3):
        for d in (2, 5):
            basis = legendre_tensor_basis((d,) * order)
            mode_basis = legendre_tensor_basis((d,))
            cone = Rank1Cone(basis)
            exact = variation_exact(cone)
            grid = standard_grid(order)
            pts = grid[np.linspace(0, len(grid) - 1, 100).astype(int)]
            exact_vals = exact(pts)

            for i, point in enumerate(pts):
                factors = []
                for m in range(order):
                    row = mode_basis.kernel_rows(point[m : m + 1][:, None])[0]
                    factors.append(row / np.linalg.norm(row))
                witness = rank1_tensor(factors)
                value = eval_function(basis, witness, point[None, :])[0]
                assert value**2 == pytest.approx(exact_vals[i], abs=1e-10)

            mc_vals = variation_estimate(cone, 10_000, seed=7)(pts)
            assert np.all(mc_vals <= exact_vals * (1 + 1e-12) + 1e-12)
    assert time.perf_counter() - start < 10.0


def test_04_sampled_isometry_constant_tracks_spectral_value():
    start = time.perf_counter()
    weight = uniform_weight(1)
    for d in (2, 3, 4):
        space = FullSpace(legendre_tensor_basis((d,)))
        for seed in range(10):
            batch = draw_samples(DomainSpec(1), weight, 50, seed)
            spectral = rip_delta_linear(space, batch).delta_hat
            sampled = rip_delta_mc(space, batch, 100_000, seed).delta_hat
            assert sampled <= spectral * (1 + 1e-12)
            assert sampled >= 0.95 * spectral
    assert time.perf_counter() - start < 30.0


def test_05_singleton_failure_rate_obeys_exponential_bound():
    start = time.perf_counter()
    basis = legendre_tensor_basis((2,))
    single = LinearSpan(basis, ((1,),))
    weight = uniform_weight(1)
    sup_norm_w = variation_norms(variation_exact(single), weight).sup_norm
    assert sup_norm_w == pytest.approx(3.0, abs=1e-12)

    delta = 0.3
    estimates = []
    for n in (25, 50, 100, 200, 400):
        est = rip_probability(
            single, weight, n, delta, trials=10_000, seed=11, sup_norm_w=sup_norm_w
        )
        bound = 2.0 * math.exp(-est.hoeffding_exponent)
        assert est.hoeffding_exponent == pytest.approx(
            0.5 * n * (delta / sup_norm_w) ** 2, rel=1e-12
        )
        stderr = math.sqrt(est.rate * (1.0 - est.rate) / est.trials)
        assert est.rate <= bound + 3.0 * stderr
        estimates.append(est)

    for earlier, later in zip(estimates, estimates[1:]):
        overlap = (
            later.wilson_low <= earlier.wilson_high
            and earlier.wilson_low <= later.wilson_high
        )
        assert later.rate <= earlier.rate or overlap
    assert time.perf_counter() - start < 120.0


def test_06_recovery_error_collapses_with_sample_count():
    start = time.perf_counter()
    cells = phase_diagram(
        [2], [15, 50, 150, 500], dim=15, target=TARGET_ONES, trials=20, seed=0
    )
    by_n = {cell.n: cell for cell in cells}
    assert by_n[500].mean_rel_error <= by_n[15].mean_rel_error / 100.0
    assert by_n[500].success_rate >= 0.9
    assert time.perf_counter() - start < 300.0


def test_07_recovered_tensor_is_quasi_optimal_on_perturbed_rank1():
    start = time.perf_counter()
    dim = 6
    basis = legendre_tensor_basis((dim, dim))
    cone = Rank1Cone(basis)
    weight = optimal_weight(variation_exact(FullSpace(basis)))
    n = 10 * dim * dim

    for seed in range(20):
        rng = make_rng(seed)
        factors = [rng.standard_normal(dim) for _ in range(2)]
        star = rank1_tensor([f / np.linalg.norm(f) for f in factors])
        noise = rng.standard_normal(basis.dims)
        target = dense_tensor(star.to_dense() + 1e-3 * noise / np.linalg.norm(noise))

        batch = draw_samples(DomainSpec(2), weight, n, seed)
        values = eval_function(basis, target, batch.points)
        result = solve_iht_rank1(basis, batch, values)
        delta_hat = rip_delta_mc(Shift(basis, target, cone), batch, 1024, seed).delta_hat
        report = quasi_opt_check(target, cone, batch, result, delta_hat, weight=weight)

        assert report.applicable and report.delta_hat < 1.0
        assert report.factor == pytest.approx(1.0 + 2.0 / math.sqrt(1.0 - delta_hat))
        assert report.lhs <= report.rhs
        assert report.passed
    assert time.perf_counter() - start < 120.0


def test_08_chart_projection_and_approximation_rate_checks_pass():
    start = time.perf_counter()
    charts = ((circle_chart(1.0), 1.0), (parabola_chart(0.7), 1.0 / 0.7))
    for chart, reach in charts:
        tangent = check_tangent_projection(chart, reach, 0.9 * reach, 400, seed=3)
        assert tangent.passed
        if chart.kind == "circle":
            assert tangent.max_equality_gap <= 1e-12
        manifold = check_manifold_projection(chart, reach, 0.45 * reach, 400, seed=3)
        assert manifold.passed
        rates = check_hausdorff_rates(
            chart, reach, [0.4 * reach, 0.2 * reach, 0.1 * reach]
        )
        assert rates.passed

    anchor = np.zeros((4, 4))
    np.fill_diagonal(anchor[:2, :2], (2.0, 1.0))
    perturb = reach_perturbation_check(anchor, 2, 0.5, num_draws=1000, seed=9)
    assert perturb.draws == 1000
    assert perturb.unique_truncations == 1000
    assert perturb.within_radius == 1000
    assert perturb.passed
    assert time.perf_counter() - start < 60.0


def test_09_shrinking_neighbourhood_variation_respects_local_bound():
    start = time.perf_counter()
    sigma = 2.0
    anchor = np.zeros((4, 4))
    anchor[0, 0] = sigma
    basis = legendre_tensor_basis((4, 4))
    radii = [0.5 * sigma, 0.25 * sigma, 0.125 * sigma]
    report = klimit_check(basis, anchor, 1, radii, num_samples=4096, seed=0)
    assert report.below_upper
    assert report.gaps_monotone
    assert time.perf_counter() - start < 120.0


def test_10_rendered_figures_reflect_delimited_data(tmp_path):
    pytest.importorskip("artifact_plots")
    from artifact_plots.render import render

    import varfun.cli as cli

    start = time.perf_counter()
    configs = {
        "variation": {"dims": [3]},
        "rip-prob": {"dims": [2], "delta": 0.3, "n_values": [25, 50, 100], "trials": 200},
        "phase-diagram": {"orders": [2], "sample_counts": [15, 50], "dim": 3, "trials": 3},
    }
    csvs = {}
    for sub, payload in configs.items():
        cfg = tmp_path / f"{sub}.json"
        cfg.write_text(json.dumps(payload))
        out = tmp_path / sub
        assert cli.main([sub, "--config", str(cfg), "--out", str(out)]) == 0
        (csv_file,) = sorted(out.glob("*.csv"))
        csvs[sub] = csv_file

    jobs = (
        ("variation-lines", csvs["variation"], tmp_path / "variation.png"),
        ("rip-decay", csvs["rip-prob"], tmp_path / "rip.png"),
        ("phase-heatmap", csvs["phase-diagram"], tmp_path / "phase.png"),
    )
    rendered = {}
    for kind, source, image in jobs:
        rendered[kind] = render(kind, source, image)
        assert image.exists() and image.stat().st_size > 0

    assert max(rendered["variation-lines"]["K_value"]) == pytest.approx(9.0, abs=1e-9)
    assert time.perf_counter() - start < 30.0
