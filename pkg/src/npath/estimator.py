"""Measurement protocols that estimate the quantifiers from circuit runs.

Each estimator runs the interferometer the way an experiment would and maps
outcome statistics through a closed-form protocol formula:

* ``estimate_D``: one detector readout per reference path (N settings),
  ``sqrt((N/(N-1)) (1 - mean_k p(0|k)))``.
* ``estimate_VC``: a single particle readout at the all-zero phase setting,
  ``(N/(N-1)) |p(0|0) - 1/N|``.
* ``estimate_VP``: particle readouts at all 2**N binary phase settings
  (phases 0 or pi per path, enumerated lexicographically by bitmask with bit
  ``i`` driving path ``i``), combined through a root-mean-square formula that
  equals the purity visibility exactly when the overlaps are real.
* ``phase_average_oracle``: brute-force Monte Carlo average over uniformly
  random phase vectors; the protocol-independent reference for the purity
  visibility.
* ``record_fringes`` / ``fit_sine``: the traditional two-path method, a sine
  fit through the zero-outcome rate versus the relative phase.

``shots=None`` substitutes exact Born probabilities for counts (the
infinite-shot limit; ``std_error`` is 0 and ``shots_per_setting`` is 0).
With integer ``shots`` each setting is sampled from its own multinomial with
a deterministic per-setting seed (base seed plus the setting index), and
``std_error`` propagates the counting statistics by a first-order delta
method, or by parametric bootstrap when ``error_method="bootstrap"``.
Estimates pushed outside [0, 1] by shot noise are clamped and flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .circuit import (
    DetectorReadout,
    InterferometerSpec,
    ParticleReadout,
    run,
    sweep_particle_distributions,
)
from .statevec import sample_counts

__all__ = [
    "EstimateResult",
    "FringeData",
    "SineFit",
    "FitError",
    "estimate_D",
    "estimate_VC",
    "estimate_VP",
    "phase_average_oracle",
    "record_fringes",
    "fit_sine",
    "binary_phase_grid",
    "distinguishability_from_probabilities",
    "coherence_visibility_from_probability",
    "purity_visibility_from_probabilities",
]

_CLAMP_TOL = 1e-12
_SMALL_VALUE = 1e-6


class FitError(RuntimeError):
    """A least-squares fit could not be solved."""


@dataclass(frozen=True)
class EstimateResult:
    """One estimated quantifier with its counting-statistics uncertainty."""

    value: float
    std_error: float
    shots_per_setting: int  # 0 in the exact-probability mode
    settings_used: int
    clamped: bool  # True when shot noise pushed the raw value outside [0, 1]


@dataclass(frozen=True, eq=False)
class FringeData:
    """Zero/one outcome record of a two-path phase scan.

    With ``shots > 0`` the count vectors are integers summing to ``shots``
    at every grid point; ``shots == 0`` marks the exact-probability mode, in
    which the vectors hold Born probabilities summing to one.
    """

    phi_grid: np.ndarray
    counts0: np.ndarray
    counts1: np.ndarray
    shots: int

    def __post_init__(self):
        phi = np.asarray(self.phi_grid, dtype=np.float64)
        if phi.ndim != 1 or phi.size < 8:
            raise ValueError("phi_grid must be a vector of at least 8 phases")
        if not np.all(np.isfinite(phi)):
            raise ValueError("phi_grid must be finite")
        if self.shots < 0:
            raise ValueError("shots must be non-negative")
        kind = np.float64 if self.shots == 0 else np.int64
        zeros = np.asarray(self.counts0, dtype=kind)
        ones = np.asarray(self.counts1, dtype=kind)
        if zeros.shape != phi.shape or ones.shape != phi.shape:
            raise ValueError("count vectors must match the phase grid")
        total = 1.0 if self.shots == 0 else self.shots
        if np.max(np.abs(zeros + ones - total)) > 1e-9:
            raise ValueError("counts0 + counts1 must equal shots at every phase")
        for array in (phi, zeros, ones):
            array.setflags(write=False)
        object.__setattr__(self, "phi_grid", phi)
        object.__setattr__(self, "counts0", zeros)
        object.__setattr__(self, "counts1", ones)
        object.__setattr__(self, "shots", int(self.shots))

    @property
    def zero_rate(self) -> np.ndarray:
        """Normalized zero-outcome signal, the quantity the sine fit sees."""
        if self.shots == 0:
            return self.counts0
        return self.counts0 / self.shots


@dataclass(frozen=True)
class SineFit:
    """Least-squares sine through a fringe scan: ``a sin(phi + delta) + c``."""

    amplitude: float
    offset: float
    phase_shift: float
    residual: float  # root-mean-square misfit

    @property
    def visibility(self) -> float:
        """Twice the amplitude, so a full-contrast ideal fringe reads 1."""
        return 2.0 * self.amplitude


def binary_phase_grid(num_paths: int) -> np.ndarray:
    """All phase vectors with entries 0 or pi, ordered by bitmask.

    Row ``s`` assigns pi to path ``i`` exactly when bit ``i`` of ``s`` is
    set, so row 0 is the all-zero setting.
    """
    masks = np.arange(1 << num_paths)
    bits = (masks[:, None] >> np.arange(num_paths)[None, :]) & 1
    return bits * math.pi


def distinguishability_from_probabilities(zero_probs, num_paths: int):
    """Detector-protocol formula, vectorized over leading axes.

    ``zero_probs`` holds the detector zero-outcome probability for each
    reference path along the last axis.
    """
    probs = np.asarray(zero_probs, dtype=np.float64)
    if probs.shape[-1] != num_paths:
        raise ValueError(f"expected {num_paths} probabilities on the last axis")
    radicand = num_paths / (num_paths - 1.0) * (1.0 - probs.mean(axis=-1))
    return np.sqrt(np.clip(radicand, 0.0, None))


def coherence_visibility_from_probability(zero_prob, num_paths: int):
    """Single-setting protocol formula, vectorized."""
    probs = np.asarray(zero_prob, dtype=np.float64)
    return num_paths / (num_paths - 1.0) * np.abs(probs - 1.0 / num_paths)


def purity_visibility_from_probabilities(zero_probs, num_paths: int):
    """Binary-phase protocol formula, vectorized over leading axes.

    ``zero_probs`` holds the particle zero-outcome probability for each of
    the 2**N binary settings along the last axis, in bitmask order.
    """
    probs = np.asarray(zero_probs, dtype=np.float64)
    if probs.shape[-1] != 1 << num_paths:
        raise ValueError(f"expected {1 << num_paths} probabilities on the last axis")
    scale = num_paths**3 / (2.0 ** (num_paths + 1) * (num_paths - 1.0))
    return np.sqrt(scale * np.sum((probs - 1.0 / num_paths) ** 2, axis=-1))


def _require_shots(shots) -> int:
    if not isinstance(shots, (int, np.integer)) or isinstance(shots, bool) or shots < 1:
        raise ValueError(f"shots must be a positive integer or None, got {shots!r}")
    return int(shots)


def _base_seed(spec: InterferometerSpec, seed) -> int:
    return spec.seed if seed is None else int(seed)


def _finish_value(raw: float) -> tuple[float, bool]:
    clipped = min(max(raw, 0.0), 1.0)
    return clipped, bool(abs(clipped - raw) > _CLAMP_TOL)


def _sqrt_clamped(radicand: float) -> tuple[float, bool]:
    value = math.sqrt(max(radicand, 0.0))
    clipped, over = _finish_value(value)
    return clipped, bool(radicand < -_CLAMP_TOL or over)


def _delta_to_value_scale(value: float, variance_of_square: float) -> float:
    """Standard error of ``sqrt(x)`` given the variance of ``x``.

    Near zero the first-order expansion diverges; the square root of the
    standard error of the square is the conservative replacement there.
    """
    sigma_square = math.sqrt(max(variance_of_square, 0.0))
    if value > _SMALL_VALUE:
        return sigma_square / (2.0 * value)
    return math.sqrt(sigma_square)


def _bootstrap_std(
    frequencies: np.ndarray,
    shots: int,
    seed: int,
    statistic: Callable[[np.ndarray], float],
    resamples: int,
) -> float:
    """Parametric bootstrap over independent per-setting binomial counts."""
    if resamples < 2:
        raise ValueError("bootstrap needs at least 2 resamples")
    values = np.empty(resamples)
    for index in range(resamples):
        rng = np.random.default_rng([seed, index])
        resampled = rng.binomial(shots, frequencies) / shots
        values[index] = statistic(resampled)
    return float(np.std(values, ddof=1))


def _sample_zero_frequencies(
    distributions: np.ndarray, shots: int, seed: int
) -> np.ndarray:
    """First-outcome frequency of a multinomial draw per setting row."""
    frequencies = np.empty(distributions.shape[0])
    for index, row in enumerate(distributions):
        counts = sample_counts(row, shots, seed + index)
        frequencies[index] = counts[0] / shots
    return frequencies


def estimate_D(
    spec: InterferometerSpec,
    shots: int | None = None,
    seed: int | None = None,
    error_method: str = "delta",
    resamples: int = 200,
) -> EstimateResult:
    """Estimate the distinguishability by the N-setting detector protocol.

    Runs ``DetectorReadout(k)`` for every reference path ``k`` and combines
    the zero-outcome statistics; setting ``k`` draws its counts with seed
    ``seed + k``.
    """
    _check_error_method(error_method)
    n = spec.num_paths
    distributions = np.stack(
        [run(spec, DetectorReadout(path)) for path in range(n)]
    )
    if shots is None:
        probs = distributions[:, 0]
        value, clamped = _sqrt_clamped(n / (n - 1.0) * (1.0 - float(probs.mean())))
        return EstimateResult(value, 0.0, 0, n, clamped)
    shots = _require_shots(shots)
    base = _base_seed(spec, seed)
    freqs = _sample_zero_frequencies(distributions, shots, base)
    value, clamped = _sqrt_clamped(n / (n - 1.0) * (1.0 - float(freqs.mean())))
    if error_method == "delta":
        variance_mean = float(np.sum(freqs * (1.0 - freqs))) / (shots * n**2)
        std = _delta_to_value_scale(value, (n / (n - 1.0)) ** 2 * variance_mean)
    else:
        std = _bootstrap_std(
            freqs,
            shots,
            base,
            lambda f: float(distinguishability_from_probabilities(f, n)),
            resamples,
        )
    return EstimateResult(value, std, shots, n, clamped)


def estimate_VC(
    spec: InterferometerSpec,
    shots: int | None = None,
    seed: int | None = None,
    error_method: str = "delta",
    resamples: int = 200,
) -> EstimateResult:
    """Estimate the coherence visibility from the single all-zero setting."""
    _check_error_method(error_method)
    n = spec.num_paths
    distribution = run(spec, ParticleReadout(np.zeros(n)))
    if shots is None:
        value, clamped = _finish_value(
            n / (n - 1.0) * abs(float(distribution[0]) - 1.0 / n)
        )
        return EstimateResult(value, 0.0, 0, 1, clamped)
    shots = _require_shots(shots)
    base = _base_seed(spec, seed)
    freq = float(sample_counts(distribution, shots, base)[0]) / shots
    value, clamped = _finish_value(n / (n - 1.0) * abs(freq - 1.0 / n))
    if error_method == "delta":
        std = n / (n - 1.0) * math.sqrt(max(freq * (1.0 - freq), 0.0) / shots)
    else:
        std = _bootstrap_std(
            np.array([freq]),
            shots,
            base,
            lambda f: float(coherence_visibility_from_probability(f[0], n)),
            resamples,
        )
    return EstimateResult(value, std, shots, 1, clamped)


def estimate_VP(
    spec: InterferometerSpec,
    shots: int | None = None,
    seed: int | None = None,
    error_method: str = "delta",
    resamples: int = 200,
    max_paths: int = 16,
) -> EstimateResult:
    """Estimate the purity visibility from all 2**N binary phase settings.

    The enumeration cost doubles with every path; ``max_paths`` guards
    against accidental exponential blowups.
    """
    _check_error_method(error_method)
    n = spec.num_paths
    if n > max_paths:
        raise ValueError(
            f"binary-phase enumeration needs 2**{n} settings, cap is 2**{max_paths}"
        )
    distributions = sweep_particle_distributions(spec, binary_phase_grid(n))
    settings = distributions.shape[0]
    scale = n**3 / (2.0 ** (n + 1) * (n - 1.0))
    if shots is None:
        zero = distributions[:, 0]
        value, clamped = _sqrt_clamped(
            float(scale * np.sum((zero - 1.0 / n) ** 2))
        )
        return EstimateResult(value, 0.0, 0, settings, clamped)
    shots = _require_shots(shots)
    base = _base_seed(spec, seed)
    freqs = _sample_zero_frequencies(distributions, shots, base)
    deviations = freqs - 1.0 / n
    value, clamped = _sqrt_clamped(float(scale * np.sum(deviations**2)))
    if error_method == "delta":
        variance_square = scale**2 * float(
            np.sum(4.0 * deviations**2 * freqs * (1.0 - freqs) / shots)
        )
        std = _delta_to_value_scale(value, variance_square)
    else:
        std = _bootstrap_std(
            freqs,
            shots,
            base,
            lambda f: float(purity_visibility_from_probabilities(f, n)),
            resamples,
        )
    return EstimateResult(value, std, shots, settings, clamped)


def _check_error_method(error_method: str) -> None:
    if error_method not in ("delta", "bootstrap"):
        raise ValueError(
            f"error_method must be 'delta' or 'bootstrap', got {error_method!r}"
        )


def phase_average_oracle(
    spec: InterferometerSpec, num_phase_samples: int, seed: int | None = None
) -> float:
    """Monte Carlo root-mean-square spread of the zero-outcome probability.

    Draws phase vectors uniformly from [0, 2pi)^N, evaluates the exact
    probability at each, and rescales the mean squared deviation from 1/N.
    Converges to the purity visibility for any detector family, which makes
    it the protocol-independent cross-check for ``estimate_VP``.
    """
    if num_phase_samples < 1:
        raise ValueError("num_phase_samples must be at least 1")
    n = spec.num_paths
    rng = np.random.default_rng(_base_seed(spec, seed))
    rows = rng.uniform(0.0, 2.0 * math.pi, size=(num_phase_samples, n))
    distributions = sweep_particle_distributions(spec, rows)
    deviations = distributions[:, 0] - 1.0 / n
    return float(math.sqrt(n**3 / (n - 1.0) * float(np.mean(deviations**2))))


def record_fringes(
    spec: InterferometerSpec,
    phi_grid,
    shots: int | None = None,
    seed: int | None = None,
) -> FringeData:
    """Scan the relative phase of a two-path interferometer.

    Path 0 keeps phase zero; path 1 takes each grid value in turn.  Grid
    point ``i`` draws its counts with seed ``seed + i``.
    """
    if spec.num_paths != 2:
        raise ValueError("fringe recording is the two-path protocol")
    phi = np.asarray(phi_grid, dtype=np.float64)
    if phi.ndim != 1 or phi.size < 8:
        raise ValueError("phi_grid must be a vector of at least 8 phases")
    rows = np.column_stack([np.zeros_like(phi), phi])
    distributions = sweep_particle_distributions(spec, rows)
    if shots is None:
        return FringeData(phi, distributions[:, 0], distributions[:, 1], 0)
    shots = _require_shots(shots)
    base = _base_seed(spec, seed)
    zeros = np.empty(phi.size, dtype=np.int64)
    for index, row in enumerate(distributions):
        zeros[index] = sample_counts(row, shots, base + index)[0]
    return FringeData(phi, zeros, shots - zeros, shots)


def fit_sine(data: FringeData) -> SineFit:
    """Exact linear least squares for ``a sin(phi + delta) + c``.

    Linearized as ``a1 sin(phi) + a2 cos(phi) + c``; the amplitude and phase
    shift come from the quadrature pair, so no nonlinear solver is needed.
    Raises ``FitError`` when the grid cannot determine all three
    coefficients (rank-deficient design).
    """
    phi = data.phi_grid
    signal = data.zero_rate
    design = np.column_stack([np.sin(phi), np.cos(phi), np.ones_like(phi)])
    solution, _, rank, _ = np.linalg.lstsq(design, signal, rcond=None)
    if rank < 3:
        raise FitError("phase grid does not determine the sine fit")
    a1, a2, offset = (float(x) for x in solution)
    amplitude = math.hypot(a1, a2)
    misfit = design @ solution - signal
    residual = float(np.sqrt(np.mean(misfit**2)))
    return SineFit(amplitude, offset, math.atan2(a2, a1), residual)
