import math

import numpy as np
import pytest

from pydantic import ValidationError
from scipy import integrate, special

from scneuro.config import MeanFieldOptions, NetworkConfig, NeuronParams, VbarMode
from scneuro.meanfield import (
    SfaMode,
    Stability,
    SteadyStateStats,
    TransferCurve,
    Variant,
    _log_siegert_integral,
    constant_current_rate,
    find_fixed_points,
    in_degree_band,
    siegert_integral,
    siegert_rate,
    steady_state_stats,
    transfer_curve,
    transfer_function,
)


def synthetic_curve(fn, grid) -> TransferCurve:
    return TransferCurve(
        f_in=list(grid),
        f_out=[fn(f) for f in grid],
        variant=Variant.STANDARD,
        g_rec=4.0,
        g_sfa=0.0,
        f_bg=16.0,
    )


def deterministic_stats(v_ss: float, tau: float = 5.0) -> SteadyStateStats:
    return SteadyStateStats(
        g_syn_total=0.0,
        tilde_tau_mem=tau,
        v_ss=v_ss,
        sigma_v_standard=0.0,
        sigma_v_hardware=0.0,
        sigma_i_sq=0.0,
        Q_rec=0.0,
        Q_bg=0.0,
        v_bar=-65.0,
        f_syn=0.0,
        f_mem=2500.0,
    )


class TestSteadyStateStats:
    """Test cases for the membrane statistics at an operating point."""

    def test_background_only(self, neuron):
        """Test the background-only operating point."""
        stats = steady_state_stats(neuron, NetworkConfig(), 0.0)
        assert stats.g_syn_total == pytest.approx(12.8)
        assert stats.v_ss == pytest.approx(-58.96, abs=0.01)
        assert stats.sigma_v_standard == pytest.approx(3.96, abs=0.01)
        assert stats.Q_bg == pytest.approx(2.6)

    def test_with_recurrent_input(self, neuron):
        """Test 10 Hz recurrent input adds 6.4 nS."""
        stats = steady_state_stats(neuron, NetworkConfig(), 10.0)
        assert stats.g_syn_total == pytest.approx(19.2)
        assert stats.tilde_tau_mem == pytest.approx(6.935, abs=1e-3)
        assert stats.v_ss == pytest.approx(-56.35, abs=0.01)

    def test_hardware_noise(self, neuron):
        """Test the jump variance with the leak term vanishing at the midpoint average voltage."""
        stats = steady_state_stats(neuron, NetworkConfig(), 0.0)
        assert stats.v_bar == neuron.v_rest
        assert stats.f_syn == pytest.approx(256.0)
        assert stats.sigma_v_hardware == pytest.approx(4.43, abs=0.01)

    def test_literal_average_voltage_adds_leak_noise(self, neuron):
        """Test a v_bar away from rest makes the leak contribute to the jump variance."""
        midpoint = steady_state_stats(neuron, NetworkConfig(f_bg=0.0), 0.0)
        literal = steady_state_stats(
            neuron,
            NetworkConfig(f_bg=0.0),
            0.0,
            options=MeanFieldOptions(vbar=VbarMode.LITERAL),
        )
        assert midpoint.sigma_v_hardware == 0.0
        assert literal.sigma_v_hardware > 0.0

    def test_rejects_negative_rate(self, neuron):
        """Test a negative input rate is refused."""
        with pytest.raises(ValueError):
            steady_state_stats(neuron, NetworkConfig(), -1.0)


class TestSiegertIntegral:
    """Test cases for the first-passage integral."""

    @pytest.mark.parametrize(("a", "b"), [(-3.0, 2.0), (0.5, 4.0), (-5.0, -1.0), (-1.0, 0.0)])
    def test_matches_dense_simpson(self, a, b):
        """Test agreement with Simpson's rule on a million intervals."""
        x = np.linspace(a, b, 1_000_001)
        expected = integrate.simpson(special.erfcx(-x), x=x)
        assert siegert_integral(a, b) == pytest.approx(expected, rel=1e-6)

    def test_reversed_bounds(self):
        """Test swapping the bounds flips the sign."""
        assert siegert_integral(2.0, -1.0) == pytest.approx(-siegert_integral(-1.0, 2.0))

    def test_empty_interval(self):
        """Test equal bounds give zero."""
        assert siegert_integral(1.3, 1.3) == 0.0

    def test_log_form_matches_direct(self):
        """Test the log-space form against the direct integral at a large bound."""
        direct = siegert_integral(0.5, 20.0)
        assert _log_siegert_integral(0.5, 20.0) == pytest.approx(math.log(direct), rel=1e-9)


class TestSiegertRate:
    """Test cases for the output rate."""

    def test_deterministic_limit(self, neuron):
        """Test zero noise gives 1 / (T_refrac + charge time) above threshold."""
        rate = siegert_rate(deterministic_stats(-40.0), neuron)
        assert rate == pytest.approx(1000.0 / (2.5 + 5.0 * math.log(4.0)))

    def test_deterministic_subthreshold(self, neuron):
        """Test zero noise below threshold does not fire."""
        assert siegert_rate(deterministic_stats(-55.0), neuron) == 0.0

    def test_matches_simpson_oracle_on_random_draws(self, neuron):
        """Test 100 seeded operating points against a million-panel Simpson oracle."""
        rng = np.random.default_rng(2024)
        v_lower = MeanFieldOptions().v_lower(neuron)
        for sigma, upper, tau in zip(
            rng.uniform(0.5, 10.0, 100),
            rng.uniform(-3.0, 6.0, 100),
            rng.uniform(2.0, 10.0, 100),
            strict=True,
        ):
            v_ss = neuron.v_thresh - upper * sigma
            stats = deterministic_stats(v_ss, tau).model_copy(update={"sigma_v_standard": sigma})
            x = np.linspace((v_lower - v_ss) / sigma, upper, 1_000_001)
            area = integrate.simpson(special.erfcx(-x), x=x)
            expected = 1000.0 / (neuron.T_refrac + tau * math.sqrt(math.pi) * area)
            assert siegert_rate(stats, neuron) == pytest.approx(expected, rel=1e-6)

    @pytest.mark.parametrize("bound", [-40.0, 40.0])
    def test_extreme_bounds_stay_finite(self, neuron, bound):
        """Test integrand arguments of magnitude 40 neither overflow nor go negative."""
        sigma = 0.5
        stats = deterministic_stats(neuron.v_thresh - bound * sigma).model_copy(
            update={"sigma_v_standard": sigma}
        )
        rate = siegert_rate(stats, neuron)
        assert math.isfinite(rate)
        assert 0.0 <= rate < 1000.0 / neuron.T_refrac
        if bound > 0:
            assert rate < 1e-300

    def test_deep_subthreshold(self, neuron):
        """Test a weak background gives a vanishing rate."""
        assert transfer_function(neuron, NetworkConfig(f_bg=1.0), 0.0) < 1e-6

    def test_no_input(self, neuron):
        """Test a neuron without any input is silent."""
        assert transfer_function(neuron, NetworkConfig(f_bg=0.0), 0.0) == 0.0

    def test_refractory_bounds_rate(self, neuron):
        """Test the rate never exceeds 1 / T_refrac."""
        assert transfer_function(neuron, NetworkConfig(), 500.0) < 1000.0 / neuron.T_refrac

    def test_constant_current_rate(self, neuron):
        """Test the noiseless rate is zero below threshold and positive above."""
        assert constant_current_rate(neuron, NetworkConfig(), 0.0) == 0.0
        assert constant_current_rate(neuron, NetworkConfig(), 100.0) > 0.0


class TestTransferCurve:
    """Test cases for transfer curves."""

    def test_monotone(self, neuron):
        """Test the standard and hardware curves increase with the input rate."""
        grid = range(0, 101, 10)
        for variant in (Variant.STANDARD, Variant.HARDWARE):
            curve = transfer_curve(neuron, NetworkConfig(), grid, variant)
            assert np.all(np.diff(curve.f_out) >= 0)

    def test_evaluator_matches_samples(self, neuron):
        """Test the attached evaluator reproduces the sampled values."""
        curve = transfer_curve(neuron, NetworkConfig(), [0.0, 20.0, 40.0])
        assert curve.evaluate(20.0) == pytest.approx(curve.f_out[1])

    def test_adaptation_lowers_curve(self, neuron):
        """Test steady-state SFA lowers the output rate."""
        grid = [20.0, 40.0, 60.0]
        plain = transfer_curve(neuron, NetworkConfig(), grid)
        adapted = transfer_curve(
            neuron, NetworkConfig(g_SFA=2.0), grid, sfa_mode=SfaMode.STEADY_STATE
        )
        assert adapted.reconstructed
        assert not plain.reconstructed
        assert all(a < b for a, b in zip(adapted.f_out, plain.f_out, strict=True) if b > 1.0)

    def test_rejects_measured_variant(self, neuron):
        """Test measured curves cannot be computed from the mean field."""
        with pytest.raises(ValueError, match="netsim"):
            transfer_curve(neuron, NetworkConfig(), [0.0], Variant.MEASURED)

    @pytest.mark.parametrize("grid", [[], [10.0, 5.0], [-1.0, 2.0]])
    def test_rejects_bad_grid(self, neuron, grid):
        """Test grids must be non-empty, non-negative and increasing."""
        with pytest.raises(ValueError):
            transfer_curve(neuron, NetworkConfig(), grid)

    def test_rejects_mismatched_lengths(self):
        """Test f_in and f_out must have equal lengths."""
        with pytest.raises(ValidationError):
            TransferCurve(
                f_in=[0.0, 1.0],
                f_out=[0.0],
                variant=Variant.STANDARD,
                g_rec=4.0,
                g_sfa=0.0,
                f_bg=16.0,
            )

    def test_frame(self):
        """Test the tabular form of a curve."""
        frame = synthetic_curve(lambda f: f / 2, [0.0, 10.0]).to_frame()
        assert list(frame.columns) == ["f_in", "f_out", "variant"]
        assert frame["variant"].iloc[0] == "meanfield_standard"

    def test_interpolating_fallback(self):
        """Test curves without an evaluator interpolate between samples."""
        assert synthetic_curve(lambda f: 2 * f, [0.0, 10.0]).evaluate(2.5) == pytest.approx(5.0)

    def test_in_degree_band_brackets_curve(self, neuron):
        """Test the low in-degree curve lies below the high one."""
        grid = [0.0, 20.0, 40.0]
        low, high = in_degree_band(neuron, NetworkConfig(), grid)
        mid = transfer_curve(neuron, NetworkConfig(), grid)
        for lo, m, hi in zip(low.f_out, mid.f_out, high.f_out, strict=True):
            assert lo <= m <= hi


class TestFindFixedPoints:
    """Test cases for fixed-point detection."""

    def test_identity_is_degenerate(self):
        """Test a curve on the unity line everywhere is degenerate."""
        result = find_fixed_points(synthetic_curve(lambda f: f, range(0, 50, 5)))
        assert result.degenerate
        assert result.points == []

    def test_stable_crossing(self):
        """Test a slope below one crossing is stable."""
        result = find_fixed_points(synthetic_curve(lambda f: 10 + 0.5 * f, range(0, 41, 5)))
        assert [pt.stability for pt in result.points] == [Stability.STABLE]
        assert result.points[0].rate == pytest.approx(20.0, abs=0.01)
        assert result.stable == result.points

    def test_unstable_crossing(self):
        """Test a slope above one crossing is unstable."""
        result = find_fixed_points(synthetic_curve(lambda f: 2 * f - 13, range(0, 41, 5)))
        assert [pt.stability for pt in result.points] == [Stability.UNSTABLE]
        assert result.points[0].rate == pytest.approx(13.0, abs=0.01)

    def test_tangent_touch_is_degenerate(self):
        """Test a curve touching the line without crossing is degenerate."""
        result = find_fixed_points(
            synthetic_curve(lambda f: f + (f - 20) ** 2 / 100, range(0, 41, 5))
        )
        assert result.degenerate
        assert [pt.rate for pt in result.points] == [20.0]

    def test_no_crossing(self):
        """Test a curve below the line everywhere has no fixed points."""
        result = find_fixed_points(synthetic_curve(lambda f: 0.0 * f, range(1, 41, 5)))
        assert result.points == []
        assert not result.degenerate

    @pytest.mark.slow
    def test_default_network_is_bistable(self):
        """Test the default network has a low stable, an unstable and an upper stable point."""
        curve = transfer_curve(NeuronParams(), NetworkConfig(), range(0, 181))
        result = find_fixed_points(curve)
        assert [pt.stability for pt in result.points] == [
            Stability.STABLE,
            Stability.UNSTABLE,
            Stability.STABLE,
        ]
        assert result.points[-1].rate == pytest.approx(150.0, rel=0.2)
