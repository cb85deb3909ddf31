"""Analysis-layer tests: synthetic-recovery oracles for every operation."""

import math

import numpy as np
import pytest

from dualcirc.analysis import (
    CollapseFit,
    aggregate,
    collapse_fit,
    crossing_points,
    purification_time,
    scaling_diagnostics,
)
from dualcirc.circuits import SpecError


def rec(value, param=0.0, L=8, t=0, obs="entropy"):
    return {"param_value": param, "L": L, "t": t, "observable": obs, "value": value}


class TestAggregate:
    def test_identical_records_zero_sem(self):
        res = aggregate([rec(1.5), rec(1.5), rec(1.5)])
        point = res.points[(0.0, 8, 0, "entropy")]
        assert point.mean == pytest.approx(1.5)
        assert point.sem == 0.0
        assert point.count == 3

    def test_two_record_mean(self):
        res = aggregate([rec(1.0), rec(3.0)])
        assert res.mean((0.0, 8, 0, "entropy")) == pytest.approx(2.0)

    def test_sem_of_unit_variance_draws(self):
        rng = np.random.default_rng(0)
        res = aggregate([rec(v) for v in rng.normal(size=10_000)])
        assert res.sem((0.0, 8, 0, "entropy")) == pytest.approx(0.01, abs=0.002)

    def test_order_independent(self):
        rng = np.random.default_rng(1)
        records = [rec(v, param=p) for p in (0.1, 0.2) for v in rng.normal(size=20)]
        a = aggregate(records)
        b = aggregate(records[::-1])
        for key in a.points:
            assert a.mean(key) == pytest.approx(b.mean(key))
            assert a.sem(key) == pytest.approx(b.sem(key))

    def test_empty_input_rejected(self):
        with pytest.raises(SpecError):
            aggregate([])


def synthetic_curves(x_c, nu, mode, noise=0.0, seed=0, sizes=(16, 32, 64, 128)):
    """Curves drawn from a known master function F((x - x_c) L^(1/nu)).

    The x-window shrinks with L so every curve resolves the scaling
    region |u| <= 2 instead of degenerating into a step function.
    """
    rng = np.random.default_rng(seed)
    curves = {}
    for L in sizes:
        u = np.linspace(-2.0, 2.0, 21)
        x = x_c + u / L ** (1.0 / nu)
        if mode == "difference":
            y = 1.0 + np.abs(u) / np.sqrt(1.0 + u**2)
        else:
            y = 0.5 * (1.0 + np.tanh(u))
        y = y + noise * rng.normal(size=len(y))
        curves[L] = (x, y)
    return curves


class TestCollapseFit:
    def test_recovers_known_point_difference(self):
        fit = collapse_fit(
            synthetic_curves(0.5, 1.0, "difference"), mode="difference", n_boot=20
        )
        assert fit.x_c == pytest.approx(0.5, abs=0.01)
        assert fit.nu == pytest.approx(1.0, abs=0.05)
        assert not fit.low_confidence

    def test_recovers_known_point_ratio(self):
        fit = collapse_fit(
            synthetic_curves(0.3, 0.7, "ratio"), mode="ratio", n_boot=20
        )
        assert fit.x_c == pytest.approx(0.3, abs=0.01)
        assert fit.nu == pytest.approx(0.7, abs=0.05)

    def test_noisy_data_within_bootstrap_bars(self):
        fit = collapse_fit(
            synthetic_curves(0.5, 1.2, "ratio", noise=0.02, seed=3),
            mode="ratio",
            n_boot=100,
        )
        assert fit.n_boot >= 100
        assert abs(fit.nu - 1.2) < max(3 * fit.nu_err, 0.05)
        assert abs(fit.x_c - 0.5) < max(3 * fit.x_c_err, 0.01)

    def test_invariant_under_curve_reordering(self):
        curves = synthetic_curves(0.4, 0.9, "ratio", noise=0.01, seed=5)
        as_list = [(L, x, y) for L, (x, y) in curves.items()]
        a = collapse_fit(as_list, mode="ratio", n_boot=5)
        b = collapse_fit(as_list[::-1], mode="ratio", n_boot=5)
        assert a.x_c == pytest.approx(b.x_c, abs=1e-6)
        assert a.nu == pytest.approx(b.nu, abs=1e-6)

    def test_too_few_sizes_rejected(self):
        curves = synthetic_curves(0.5, 1.0, "ratio", sizes=(16, 32))
        with pytest.raises(SpecError):
            collapse_fit(curves, mode="ratio", n_boot=2)

    def test_disjoint_ranges_rejected(self):
        x1 = np.linspace(0.0, 1.0, 10)
        x2 = np.linspace(2.0, 3.0, 10)
        curves = [(16, x1, x1), (32, x2, x2), (64, x1, x1)]
        with pytest.raises(SpecError):
            collapse_fit(curves, mode="ratio", n_boot=2)

    def test_unknown_mode_rejected(self):
        with pytest.raises(SpecError):
            collapse_fit(synthetic_curves(0.5, 1.0, "ratio"), mode="magic")


class TestScalingDiagnostics:
    def test_pure_log_identified(self):
        L = np.array([16, 32, 64, 128, 256])
        report = scaling_diagnostics(L, 3.0 * np.log(L))
        assert report.best == "log"
        assert report.coefficients["log"][0] == pytest.approx(3.0, abs=0.05)

    def test_volume_law_identified(self):
        L = np.array([16, 32, 64, 128, 256])
        rng = np.random.default_rng(2)
        report = scaling_diagnostics(L, 0.4 * L + 0.01 * rng.normal(size=5))
        assert report.best in ("linear", "power")
        assert report.prefers("linear", "log")

    def test_quadratic_identified(self):
        L = np.array([8, 12, 16, 20, 24])
        report = scaling_diagnostics(L, 0.25 * L**2 + 1.0)
        assert report.residuals["quadratic"] < 1e-10
        assert report.prefers("quadratic", "linear")

    def test_power_law_exponent(self):
        L = np.array([16, 32, 64, 128])
        report = scaling_diagnostics(L, 2.0 * L**0.5)
        assert report.coefficients["power"][1] == pytest.approx(0.5, abs=1e-6)

    def test_degenerate_models_not_asserted_unique(self):
        # L log L vs L over a narrow window: both fit well, so the report
        # must flag the degeneracy instead of declaring a winner.
        L = np.array([8, 10, 12, 14, 16])
        report = scaling_diagnostics(L, 0.5 * L * np.log(L))
        assert "LlogL" in report.degenerate
        assert not report.conclusive or report.degenerate == ("LlogL",)

    def test_too_few_sizes_rejected(self):
        with pytest.raises(SpecError):
            scaling_diagnostics([8, 16, 32], [1.0, 2.0, 3.0])


class TestCrossingPoints:
    @staticmethod
    def fan(sizes, x_c, slope_scale=0.1):
        """Straight lines through (x_c, 1) with size-dependent slopes."""
        x = np.linspace(0.0, 1.0, 21)
        return {L: (x, 1.0 + slope_scale * L * (x - x_c)) for L in sizes}

    def test_recovers_common_crossing(self):
        out = crossing_points(self.fan([8, 16, 32], x_c=0.4))
        assert [(a, b) for a, b, _ in out] == [(8, 16), (8, 32), (16, 32)]
        for _, _, x0 in out:
            assert abs(x0 - 0.4) < 1e-6

    def test_sorted_by_size_regardless_of_input_order(self):
        curves = self.fan([32, 8, 16], x_c=0.5)
        out = crossing_points([(L, x, y) for L, (x, y) in curves.items()])
        assert [(a, b) for a, b, _ in out] == [(8, 16), (8, 32), (16, 32)]

    def test_parallel_curves_do_not_cross(self):
        x = np.linspace(0.0, 1.0, 11)
        assert crossing_points({8: (x, x), 16: (x, x + 1.0)}) == []

    def test_disjoint_ranges_skipped(self):
        out = crossing_points(
            {8: (np.array([0.0, 1.0]), np.array([0.0, 1.0])),
             16: (np.array([2.0, 3.0]), np.array([1.0, 0.0]))}
        )
        assert out == []

    def test_unsorted_x_handled(self):
        x = np.array([1.0, 0.0, 0.5])
        out = crossing_points({8: (x, x - 0.3), 16: (x, 0.3 - x)})
        assert len(out) == 1
        assert abs(out[0][2] - 0.3) < 1e-6

    def test_single_curve_rejected(self):
        with pytest.raises(SpecError):
            crossing_points({8: (np.arange(3.0), np.arange(3.0))})


class TestPurificationTime:
    def test_never_crossing_gives_sentinel(self):
        series = np.full(50, 0.69)
        assert purification_time(series) == 50

    def test_exponential_decay_crossing(self):
        t = np.arange(40)
        series = math.log(2.0) * np.exp(-t / 5.0)
        assert purification_time(series) == 1

    def test_step_series(self):
        series = [math.log(2.0)] * 7 + [0.1]
        assert purification_time(series) == 7

    def test_threshold_parameter(self):
        series = [1.0, 0.8, 0.6, 0.4]
        assert purification_time(series, threshold=0.5) == 3
