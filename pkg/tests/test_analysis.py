import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qprobe.analysis import (
    OVERFLOW_CSV_HEADER,
    SWEEP_CSV_HEADER,
    VP_BREAKPOINT_RATIO,
    count_pmf_for,
    format_overflow_csv,
    format_sweep_csv,
    overflow_comparison,
    rho_sweep,
    sweep_lambda,
    sweep_p,
    vp_bound,
    write_overflow_csv,
    write_sweep_csv,
)
from qprobe.headways import calibrate_bunched, poisson_count_pmf
from qprobe.simulate import BunchedArrivals, PoissonArrivals, SignalTiming


class TestVpBound:
    def test_three_sigma_constant(self):
        for sigma in (1.0, 2.0, 0.5, 4.0):
            assert vp_bound(3.0 * sigma, sigma) == 4.0 / 81.0

    def test_three_sigma_arbitrary_scale(self):
        for sigma in (0.1, 0.37, 11.3, 123.456):
            assert vp_bound(3.0 * sigma, sigma) == pytest.approx(
                4.0 / 81.0, rel=1e-15)

    def test_zero_sigma(self):
        assert vp_bound(1.0, 0.0) == 0.0

    def test_rejects_nonpositive_epsilon(self):
        with pytest.raises(ValueError):
            vp_bound(0.0, 1.0)
        with pytest.raises(ValueError):
            vp_bound(-1.0, 1.0)

    def test_rejects_negative_sigma(self):
        with pytest.raises(ValueError):
            vp_bound(1.0, -0.5)

    def test_breakpoint_value(self):
        sigma = 1.7
        eps = sigma * VP_BREAKPOINT_RATIO
        assert vp_bound(eps, sigma) == pytest.approx(1.0 / 6.0, rel=1e-12)

    def test_continuous_at_breakpoint(self):
        sigma = 1.0
        eps = sigma * VP_BREAKPOINT_RATIO
        below = vp_bound(eps * (1.0 - 1e-9), sigma)
        above = vp_bound(eps * (1.0 + 1e-9), sigma)
        assert below == pytest.approx(above, abs=1e-7)
        assert below == pytest.approx(1.0 / 6.0, abs=1e-7)

    def test_clamped_to_unit_interval(self):
        assert vp_bound(1e-9, 1.0) == 1.0
        assert vp_bound(1e9, 1.0) == pytest.approx(0.0, abs=1e-18)

    def test_monotone_nonincreasing_in_epsilon(self):
        grid = np.linspace(0.05, 6.0, 200)
        values = [vp_bound(e, 1.0) for e in grid]
        assert all(a >= b - 1e-15 for a, b in zip(values, values[1:]))


class TestSweepP:
    def test_poisson_endpoints(self):
        pmf = poisson_count_pmf(10.0)
        rows = sweep_p(pmf, [0.0, 0.5, 1.0], lam=10.0)
        assert rows[0].var_d == pytest.approx(10.0, abs=1e-6)
        assert rows[-1].var_d == 0.0

    def test_var_d_nonincreasing(self):
        pmf = poisson_count_pmf(7.0)
        rows = sweep_p(pmf, np.linspace(0.0, 1.0, 11))
        values = [r.var_d for r in rows]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))

    def test_percent_columns(self):
        pmf = poisson_count_pmf(10.0)
        row = sweep_p(pmf, [0.2], lam=10.0)[0]
        assert row.pct_of_lambda == pytest.approx(
            100.0 * row.three_sigma / 10.0, rel=1e-12)
        assert row.pct_of_mean_queue == pytest.approx(
            100.0 * row.three_sigma / pmf.mean(), rel=1e-12)

    def test_nan_reference_gives_nan_pct(self):
        row = sweep_p(poisson_count_pmf(5.0), [0.3])[0]
        assert math.isnan(row.pct_of_lambda)
        assert not math.isnan(row.pct_of_mean_queue)

    def test_rejects_unsorted_grid(self):
        with pytest.raises(ValueError, match="ascending"):
            sweep_p(poisson_count_pmf(5.0), [0.5, 0.2])

    def test_rejects_out_of_range_grid(self):
        with pytest.raises(ValueError):
            sweep_p(poisson_count_pmf(5.0), [0.2, 1.2])
        with pytest.raises(ValueError):
            sweep_p(poisson_count_pmf(5.0), [-0.1, 0.2])


class TestCountPmfFor:
    def test_poisson_analytic(self):
        pmf = count_pmf_for("poisson", 10.0 / 45.0, 45.0)
        assert_allclose(pmf.probs, poisson_count_pmf(10.0).probs)

    def test_unknown_model_rejected(self):
        with pytest.raises(ValueError, match="unknown model"):
            count_pmf_for("weibull", 0.1, 45.0)

    def test_bad_duration_rejected(self):
        with pytest.raises(ValueError):
            count_pmf_for("poisson", 0.1, 0.0)


class TestSweepLambda:
    def test_normalized_error_shrinks_with_rate(self):
        flows = [5.0 / 45.0, 10.0 / 45.0, 20.0 / 45.0]
        rows = sweep_lambda("poisson", flows, [0.2], 45.0)
        pcts = [r.pct_of_lambda for r in rows]
        assert pcts[0] > pcts[1] > pcts[2]

    def test_single_rate_matches_sweep_p(self):
        flow = 10.0 / 45.0
        grid = [0.1, 0.3, 0.5]
        via_lambda = sweep_lambda("poisson", [flow], grid, 45.0)
        pmf = poisson_count_pmf(10.0)
        via_p = sweep_p(pmf, grid, lam=10.0, model="poisson")
        for a, b in zip(via_lambda, via_p):
            assert a.var_d == pytest.approx(b.var_d, rel=1e-12)

    def test_bunched_below_poisson_at_shared_rate(self):
        flow = 10.0 / 45.0
        bunched = sweep_lambda("bunched", [flow], [0.1, 0.3], 45.0,
                               n_windows=100_000, seed=3)
        poisson = sweep_lambda("poisson", [flow], [0.1, 0.3], 45.0)
        for b, p in zip(bunched, poisson):
            assert b.var_d < p.var_d

    def test_deterministic_under_seed(self):
        flow = 10.0 / 45.0
        one = sweep_lambda("bunched", [flow], [0.2], 45.0,
                           n_windows=50_000, seed=5)
        two = sweep_lambda("bunched", [flow], [0.2], 45.0,
                           n_windows=50_000, seed=5)
        assert one[0].var_d == two[0].var_d

    def test_rejects_saturated_bunched_rate(self):
        with pytest.raises(ValueError, match="saturated"):
            sweep_lambda("bunched", [0.7], [0.2], 45.0, n_windows=10_000)

    def test_rejects_empty_grid(self):
        with pytest.raises(ValueError):
            sweep_lambda("poisson", [], [0.2], 45.0)


@pytest.fixture(scope="module")
def overflow_rows():
    return overflow_comparison(SignalTiming(), PoissonArrivals(20.0),
                               [0.0001, 0.3, 1.0], n_cycles=8_000,
                               warmup_cycles=100, seed=2, n_windows=20_000)


class TestOverflowComparison:

    def test_overflow_inflates_error(self, overflow_rows):
        assert (overflow_rows[0].var_d_with_overflow
                > overflow_rows[0].var_d_without_overflow)
        assert overflow_rows[0].pct_difference > 0.0

    def test_full_observation_row_is_zero(self, overflow_rows):
        last = overflow_rows[-1]
        assert last.var_d_with_overflow == 0.0
        assert last.var_d_without_overflow == 0.0
        assert last.pct_difference == 0.0

    def test_labels(self, overflow_rows):
        assert overflow_rows[0].model == "poisson"
        assert overflow_rows[0].lam == pytest.approx(20.0)
        assert overflow_rows[0].rho == pytest.approx(20.0 / 22.5)

    def test_deterministic(self):
        kwargs = dict(n_cycles=3_000, warmup_cycles=100, seed=4,
                      n_windows=20_000)
        model = BunchedArrivals(calibrate_bunched(20.0 / 90.0))
        one = overflow_comparison(SignalTiming(), model, [0.1], **kwargs)
        two = overflow_comparison(SignalTiming(), model, [0.1], **kwargs)
        assert one[0].var_d_with_overflow == two[0].var_d_with_overflow
        assert one[0].var_d_without_overflow == two[0].var_d_without_overflow


class TestRhoSweep:
    def test_row_layout_and_derived_rates(self):
        timing = SignalTiming()
        rows = rho_sweep(timing, [0.4, 0.6], n_cycles=4_000,
                         warmup_cycles=100, seed=1)
        assert [r.model for r in rows] == ["bunched", "poisson"] * 2
        assert rows[0].lam == pytest.approx(0.4 * timing.service_rate)
        assert rows[2].lam == pytest.approx(0.6 * timing.service_rate)
        assert rows[0].rho == pytest.approx(0.4)

    def test_explicit_rates_override(self):
        rows = rho_sweep(SignalTiming(), [0.88], lambdas_per_cycle=[20.0],
                         n_cycles=4_000, warmup_cycles=100, seed=1)
        assert rows[0].lam == 20.0

    def test_bunched_below_poisson_per_row(self):
        rows = rho_sweep(SignalTiming(), [0.88], n_cycles=6_000,
                         warmup_cycles=100, seed=2)
        assert rows[0].var_d < rows[1].var_d

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            rho_sweep(SignalTiming(), [0.5, 1.0], n_cycles=2_000)
        with pytest.raises(ValueError):
            rho_sweep(SignalTiming(), [], n_cycles=2_000)

    def test_rejects_mismatched_rates(self):
        with pytest.raises(ValueError, match="match"):
            rho_sweep(SignalTiming(), [0.5, 0.6], lambdas_per_cycle=[10.0],
                      n_cycles=2_000)


class TestCsvFormat:
    def test_sweep_header_contract(self):
        rows = sweep_p(poisson_count_pmf(5.0), [0.2, 0.4], lam=5.0)
        text = format_sweep_csv(rows)
        lines = text.splitlines()
        assert lines[0] == SWEEP_CSV_HEADER
        assert len(lines) == 3
        assert text.endswith("\n")

    def test_six_significant_digits(self):
        rows = sweep_p(poisson_count_pmf(10.0), [0.0], lam=10.0)
        cells = format_sweep_csv(rows).splitlines()[1].split(",")
        assert cells[4] == "10"
        assert cells[7] == "94.8683"

    def test_nan_cells_render_as_nan(self):
        rows = sweep_p(poisson_count_pmf(5.0), [0.2])
        line = format_sweep_csv(rows).splitlines()[1]
        assert ",nan," in line

    def test_extra_columns(self):
        rows = sweep_p(poisson_count_pmf(5.0), [0.2], lam=5.0)
        text = format_sweep_csv(rows, extra_header="ref,dev",
                                extra_values=[(1.0, -2.5)])
        lines = text.splitlines()
        assert lines[0].endswith(",ref,dev")
        assert lines[1].endswith(",1,-2.5")

    def test_extra_length_mismatch_rejected(self):
        rows = sweep_p(poisson_count_pmf(5.0), [0.2], lam=5.0)
        with pytest.raises(ValueError):
            format_sweep_csv(rows, extra_header="ref", extra_values=[])

    def test_overflow_header(self):
        rows = overflow_comparison(SignalTiming(), PoissonArrivals(20.0),
                                   [0.5], n_cycles=2_000, warmup_cycles=100,
                                   seed=3)
        text = format_overflow_csv(rows)
        assert text.splitlines()[0] == OVERFLOW_CSV_HEADER

    def test_writers_round_trip_bytes(self, tmp_path):
        rows = sweep_p(poisson_count_pmf(5.0), [0.1, 0.9], lam=5.0)
        path = tmp_path / "sweep.csv"
        write_sweep_csv(rows, path)
        assert path.read_text() == format_sweep_csv(rows)
        orows = overflow_comparison(SignalTiming(), PoissonArrivals(20.0),
                                    [0.5], n_cycles=2_000, warmup_cycles=100,
                                    seed=3)
        opath = tmp_path / "overflow.csv"
        write_overflow_csv(orows, opath)
        assert opath.read_text() == format_overflow_csv(orows)
