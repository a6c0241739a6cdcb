"""Estimator protocols against analytic values, shot-noise statistics, fits."""

import math

import numpy as np
import pytest

from npath.circuit import InterferometerSpec, NoiseParams, ry
from npath.estimator import (
    EstimateResult,
    FitError,
    FringeData,
    binary_phase_grid,
    coherence_visibility_from_probability,
    distinguishability_from_probabilities,
    estimate_D,
    estimate_VC,
    estimate_VP,
    fit_sine,
    phase_average_oracle,
    purity_visibility_from_probabilities,
    record_fringes,
)
from npath.quantifiers import (
    distinguishability,
    overlap_matrix_for,
    visibility_coherence,
    visibility_purity,
)

THETAS = [0.0, 0.3 * math.pi, 0.6 * math.pi, math.pi]


def complex_overlap_spec(theta=math.pi / 2):
    """Two-path family whose single overlap is purely imaginary.

    The binary-phase protocol sees a flat signal here while the true purity
    visibility stays at cos(theta / 2).
    """
    phase = np.diag([1j, 1.0])
    return InterferometerSpec(
        num_paths=2, detector_unitaries=(np.eye(2), phase @ ry(theta))
    )


class TestExactConsistency:
    @pytest.mark.parametrize("num_paths", [2, 4, 8])
    @pytest.mark.parametrize("theta", THETAS)
    def test_matches_analytic_quantifiers(self, num_paths, theta):
        spec = InterferometerSpec(num_paths=num_paths, theta=theta)
        overlaps = overlap_matrix_for(spec)
        assert estimate_D(spec).value == pytest.approx(
            distinguishability(overlaps), abs=1e-10
        )
        assert estimate_VC(spec).value == pytest.approx(
            visibility_coherence(overlaps), abs=1e-10
        )
        assert estimate_VP(spec).value == pytest.approx(
            visibility_purity(overlaps), abs=1e-10
        )

    def test_exact_mode_result_fields(self):
        spec = InterferometerSpec(num_paths=4, theta=0.5)
        for result, settings in [
            (estimate_D(spec), 4),
            (estimate_VC(spec), 1),
            (estimate_VP(spec), 16),
        ]:
            assert isinstance(result, EstimateResult)
            assert result.std_error == 0.0
            assert result.shots_per_setting == 0
            assert result.settings_used == settings
            assert not result.clamped

    def test_distinguishability_sixteen_paths(self):
        spec = InterferometerSpec(num_paths=16, theta=0.6 * math.pi)
        expected = distinguishability(overlap_matrix_for(spec))
        assert estimate_D(spec).value == pytest.approx(expected, abs=1e-10)

    def test_frozen_examples(self):
        # closed detectors carry no information; orthogonal ones carry all
        assert estimate_D(InterferometerSpec(num_paths=4)).value == pytest.approx(
            0.0, abs=1e-12
        )
        pi_spec = InterferometerSpec(num_paths=2, theta=math.pi)
        assert estimate_D(pi_spec).value == pytest.approx(1.0, abs=1e-12)
        assert estimate_VC(pi_spec).value == pytest.approx(0.0, abs=1e-12)
        assert estimate_VC(InterferometerSpec(num_paths=2)).value == pytest.approx(
            1.0, abs=1e-12
        )
        half_pi = InterferometerSpec(num_paths=4, theta=math.pi / 2)
        assert estimate_VC(half_pi).value == pytest.approx(
            (8.0 / math.sqrt(2.0) + 2.0) / 12.0, abs=1e-12
        )
        assert estimate_VP(half_pi).value == pytest.approx(
            math.sqrt(5.0 / 12.0), abs=1e-12
        )

    @pytest.mark.parametrize("theta", [0.0, 0.4, 1.3, math.pi])
    def test_two_path_purity_protocol_closed_form(self, theta):
        spec = InterferometerSpec(num_paths=2, theta=theta)
        assert estimate_VP(spec).value == pytest.approx(
            abs(math.cos(theta / 2.0)), abs=1e-12
        )

    def test_mixing_offset_at_zero_angle(self):
        # a mixed particle input caps the zero-phase peak at 1 - mixing
        spec = InterferometerSpec(
            num_paths=2, theta=0.0, noise=NoiseParams(mixing=0.1)
        )
        assert estimate_VC(spec).value == pytest.approx(0.8, abs=1e-12)


class TestSampledStatistics:
    def test_deterministic_given_seed(self):
        spec = InterferometerSpec(num_paths=4, theta=0.8)
        first = estimate_VP(spec, shots=500, seed=3)
        second = estimate_VP(spec, shots=500, seed=3)
        assert first == second
        assert first != estimate_VP(spec, shots=500, seed=4)

    def test_seed_defaults_to_spec_seed(self):
        spec = InterferometerSpec(num_paths=4, theta=0.8, seed=7)
        assert estimate_D(spec, shots=300) == estimate_D(spec, shots=300, seed=7)

    @pytest.mark.parametrize(
        "estimate", [estimate_D, estimate_VC, estimate_VP], ids=["D", "VC", "VP"]
    )
    def test_reported_std_error_is_calibrated(self, estimate):
        spec = InterferometerSpec(num_paths=4, theta=0.6 * math.pi)
        results = [estimate(spec, shots=2000, seed=s) for s in range(200)]
        empirical = np.std([r.value for r in results], ddof=1)
        reported = np.median([r.std_error for r in results])
        assert reported / 1.5 <= empirical <= reported * 1.5

    def test_bootstrap_agrees_with_delta(self):
        spec = InterferometerSpec(num_paths=4, theta=0.6 * math.pi)
        delta = estimate_D(spec, shots=2000, seed=1)
        boot = estimate_D(spec, shots=2000, seed=1, error_method="bootstrap")
        assert boot.value == delta.value
        assert delta.std_error / 1.5 <= boot.std_error <= delta.std_error * 1.5

    def test_clamping_flags_out_of_range_draws(self):
        # at full distinguishability, roughly half of all finite-shot draws
        # push the radicand above 1 and must clamp
        spec = InterferometerSpec(num_paths=2, theta=math.pi)
        results = [estimate_D(spec, shots=10, seed=s) for s in range(40)]
        clamped = [r for r in results if r.clamped]
        assert clamped
        assert all(r.value == 1.0 for r in clamped)
        assert all(r.value <= 1.0 for r in results)

    def test_sampled_result_fields(self):
        spec = InterferometerSpec(num_paths=2, theta=0.5)
        result = estimate_VP(spec, shots=1000, seed=0)
        assert result.shots_per_setting == 1000
        assert result.settings_used == 4
        assert result.std_error > 0.0

    def test_shots_validation(self):
        spec = InterferometerSpec(num_paths=2)
        with pytest.raises(ValueError, match="shots"):
            estimate_D(spec, shots=0)
        with pytest.raises(ValueError, match="error_method"):
            estimate_D(spec, shots=10, error_method="jackknife")

    def test_enumeration_cap(self):
        spec = InterferometerSpec(num_paths=4)
        with pytest.raises(ValueError, match="cap"):
            estimate_VP(spec, max_paths=2)


class TestPhaseAverageOracle:
    @pytest.mark.parametrize("num_paths", [2, 4])
    @pytest.mark.parametrize("theta", [0.3 * math.pi, 0.6 * math.pi])
    def test_converges_to_purity_visibility(self, num_paths, theta):
        spec = InterferometerSpec(num_paths=num_paths, theta=theta)
        samples = 10_000
        oracle = phase_average_oracle(spec, samples, seed=5)
        expected = visibility_purity(overlap_matrix_for(spec))
        assert abs(oracle - expected) <= 3.0 / math.sqrt(samples)

    def test_vanishes_for_orthogonal_detectors(self):
        spec = InterferometerSpec(num_paths=2, theta=math.pi)
        assert phase_average_oracle(spec, 10_000, seed=1) == pytest.approx(
            0.0, abs=0.01
        )

    def test_sample_count_validation(self):
        with pytest.raises(ValueError, match="num_phase_samples"):
            phase_average_oracle(InterferometerSpec(num_paths=2), 0)

    def test_binary_protocol_misses_imaginary_overlap(self):
        # the 2**N-setting protocol only lower-bounds the purity visibility;
        # a purely imaginary overlap drives the bound all the way to zero
        spec = complex_overlap_spec()
        lower = estimate_VP(spec).value
        oracle = phase_average_oracle(spec, 20_000, seed=2)
        assert lower == pytest.approx(0.0, abs=1e-10)
        assert oracle == pytest.approx(math.cos(math.pi / 4.0), abs=0.02)
        assert oracle - lower > 1e-3


class TestFringes:
    def grid(self, points=16):
        return np.linspace(0.0, 2.0 * math.pi, points, endpoint=False)

    def test_open_interferometer_fringe(self):
        spec = InterferometerSpec(num_paths=2, theta=0.0)
        data = record_fringes(spec, self.grid())
        np.testing.assert_allclose(
            data.zero_rate, (1.0 + np.cos(data.phi_grid)) / 2.0, atol=1e-10
        )
        fit = fit_sine(data)
        assert fit.amplitude == pytest.approx(0.5, abs=1e-10)
        assert fit.offset == pytest.approx(0.5, abs=1e-10)
        assert fit.visibility == pytest.approx(1.0, abs=1e-10)
        assert fit.residual == pytest.approx(0.0, abs=1e-10)

    def test_closed_interferometer_is_flat(self):
        spec = InterferometerSpec(num_paths=2, theta=math.pi)
        fit = fit_sine(record_fringes(spec, self.grid()))
        assert fit.amplitude == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("theta", [0.3, 0.5 * math.pi, 2.5])
    def test_exact_visibility_tracks_overlap(self, theta):
        spec = InterferometerSpec(num_paths=2, theta=theta)
        fit = fit_sine(record_fringes(spec, self.grid()))
        assert fit.visibility == pytest.approx(abs(math.cos(theta / 2.0)), abs=1e-10)

    def test_sampled_visibility_within_shot_noise(self):
        spec = InterferometerSpec(num_paths=2, theta=0.5 * math.pi)
        data = record_fringes(spec, self.grid(), shots=8000, seed=0)
        assert data.counts0.dtype == np.int64
        np.testing.assert_array_equal(data.counts0 + data.counts1, 8000)
        fit = fit_sine(data)
        assert fit.visibility == pytest.approx(math.cos(math.pi / 4.0), abs=0.02)

    def test_sampling_is_deterministic(self):
        spec = InterferometerSpec(num_paths=2, theta=1.0)
        a = record_fringes(spec, self.grid(), shots=100, seed=9)
        b = record_fringes(spec, self.grid(), shots=100, seed=9)
        np.testing.assert_array_equal(a.counts0, b.counts0)

    def test_requires_two_paths_and_enough_points(self):
        with pytest.raises(ValueError, match="two-path"):
            record_fringes(InterferometerSpec(num_paths=4), self.grid())
        with pytest.raises(ValueError, match="at least 8"):
            record_fringes(InterferometerSpec(num_paths=2), self.grid(7))

    def test_fit_recovers_known_coefficients(self):
        phi = self.grid(32)
        signal = 0.5 + 0.3 * np.sin(phi + 0.7)
        data = FringeData(phi, signal, 1.0 - signal, 0)
        fit = fit_sine(data)
        assert fit.amplitude == pytest.approx(0.3, abs=1e-12)
        assert fit.offset == pytest.approx(0.5, abs=1e-12)
        assert fit.phase_shift == pytest.approx(0.7, abs=1e-12)

    def test_degenerate_grid_raises(self):
        phi = np.full(8, 0.3)
        flat = np.full(8, 0.5)
        with pytest.raises(FitError):
            fit_sine(FringeData(phi, flat, 1.0 - flat, 0))

    def test_fringe_data_validation(self):
        phi = self.grid(8)
        with pytest.raises(ValueError, match="must equal shots"):
            FringeData(phi, np.full(8, 3), np.full(8, 4), 10)


class TestProtocolFormulas:
    def test_binary_phase_grid_layout(self):
        grid = binary_phase_grid(4)
        assert grid.shape == (16, 4)
        np.testing.assert_array_equal(grid[0], np.zeros(4))
        np.testing.assert_allclose(grid[5], [math.pi, 0.0, math.pi, 0.0])
        np.testing.assert_allclose(grid[-1], np.full(4, math.pi))

    def test_vectorized_formulas_broadcast(self):
        probs = np.full((3, 4), 0.25)
        np.testing.assert_allclose(
            distinguishability_from_probabilities(probs, 4), np.full(3, 1.0)
        )
        np.testing.assert_allclose(
            coherence_visibility_from_probability(np.array([0.25, 1.0]), 4),
            [0.0, 1.0],
        )
        flat = np.full((2, 16), 0.25)
        np.testing.assert_allclose(
            purity_visibility_from_probabilities(flat, 4), np.zeros(2)
        )

    def test_formula_shape_validation(self):
        with pytest.raises(ValueError, match="last axis"):
            distinguishability_from_probabilities(np.ones(3), 4)
        with pytest.raises(ValueError, match="last axis"):
            purity_visibility_from_probabilities(np.ones(8), 4)
