"""Three-parameter imperfection model: prediction curves and parameter fits.

The model (defined with the circuit layer's ``NoiseParams``) has a mixing
weight applied to every qubit's initial state, an imbalance amplitude
replacing every balanced splitter, and a multiplicative scale on all
which-path rotation angles.  This module turns the model into numbers:

* ``model_curves`` predicts the infinite-shot value of a chosen quantifier
  over a grid of coupling angles by evolving density matrices through the
  noisy circuit and applying the measurement-protocol formulas, exactly as
  the estimators would with unlimited shots.
* ``fit_noise_params`` recovers the three parameters (any subset may be held
  fixed) from observed quantifier values by weighted least squares, using a
  bounded simplex search with random multistarts and a finite-difference
  Hessian for the parameter uncertainties.

In the rotation-family circuits every (particle, detector) qubit pair
evolves independently until the phases and recombining splitters, and the
noise model is identical on every pair, so the curve evaluator propagates a
single 4x4 pair density matrix per angle and assembles register-level
quantities as tensor powers.  This is an exact regrouping of the full
density-matrix run (the circuit-level tests cross-check it against complete
simulations), and it keeps the fit objective cheap enough for multistart
searches even at 16 paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .circuit import (
    IDEAL_NOISE,
    InterferometerSpec,
    NoiseParams,
    PARAM_NAMES,
    splitter_matrix,
)
from .estimator import (
    coherence_visibility_from_probability,
    distinguishability_from_probabilities,
    purity_visibility_from_probabilities,
)

__all__ = [
    "NoiseParams",
    "IDEAL_NOISE",
    "PARAM_NAMES",
    "splitter_matrix",
    "QUANTITIES",
    "PARAM_BOUNDS",
    "Observation",
    "FitResult",
    "apply_noise_model",
    "model_curves",
    "fit_noise_params",
]

QUANTITIES = ("D", "VC", "VP")

# search box for the fit; the splitter amplitude must stay strictly inside
# (0, 1) for the splitter matrix to exist
PARAM_BOUNDS = ((0.0, 0.5), (1e-6, 1.0 - 1e-6), (0.0, 2.0))

_VP_MAX_PATHS = 16
_MAX_PATHS = 256


@dataclass(frozen=True)
class Observation:
    """One measured data point for the fit: a quantifier value at one angle."""

    theta: float
    quantity: str
    value: float
    sigma: float

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise ValueError(f"quantity must be one of {QUANTITIES}, got {self.quantity!r}")
        for name in ("theta", "value", "sigma"):
            if not math.isfinite(float(getattr(self, name))):
                raise ValueError(f"{name} must be finite")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "sigma", float(self.sigma))


@dataclass(frozen=True)
class FitResult:
    """Outcome of a noise-parameter fit.

    ``free`` marks the optimized parameters in ``(mixing, splitter,
    angle_scale)`` order; fixed parameters keep their initial values and
    have ``None`` in ``std_errors``.  ``converged`` reports whether at
    least two multistarts agreed on the optimum to within 1e-3 per
    parameter (always taken from the simplex success flag when only one
    start runs).
    """

    params: NoiseParams
    free: tuple[bool, bool, bool]
    std_errors: tuple[float | None, float | None, float | None]
    residual_sum: float
    converged: bool


def apply_noise_model(
    spec: InterferometerSpec, params: NoiseParams
) -> InterferometerSpec:
    """Copy of the spec with its noise parameters replaced."""
    if not isinstance(params, NoiseParams):
        raise ValueError(f"params must be NoiseParams, got {params!r}")
    return replace(spec, noise=params)


def _pair_reduced_states(
    thetas: np.ndarray, params: NoiseParams
) -> tuple[np.ndarray, np.ndarray]:
    """Single-qubit particle and detector states of one noisy pair.

    Evolves the 4x4 density matrix of one (particle, detector) pair (the
    particle occupies the low bit) through the splitter and the controlled
    rotation, batched over the angle grid; returns the two reduced 2x2
    states with shapes (B, 2, 2).  All gates involved are real, so the
    computation stays in real arithmetic.
    """
    eps = params.mixing
    single = np.array([[1.0 - eps, 0.0], [0.0, eps]])
    pair = np.kron(single, single)
    splitter = np.kron(np.eye(2), splitter_matrix(params.splitter))
    base = splitter @ pair @ splitter.T

    half = 0.5 * params.angle_scale * thetas
    cos, sin = np.cos(half), np.sin(half)
    batch = thetas.shape[0]
    coupling = np.zeros((batch, 4, 4))
    coupling[:, 0, 0] = 1.0
    coupling[:, 2, 2] = 1.0
    coupling[:, 1, 1] = cos
    coupling[:, 1, 3] = -sin
    coupling[:, 3, 1] = sin
    coupling[:, 3, 3] = cos
    rho = coupling @ base @ coupling.transpose(0, 2, 1)

    particle = rho[:, :2, :2] + rho[:, 2:, 2:]
    detector = rho[:, ::2, ::2] + rho[:, 1::2, 1::2]
    return particle, detector


def _tensor_power_states(factors: np.ndarray, count: int) -> np.ndarray:
    """Batched Kronecker power of (B, d, d) matrices."""
    result = factors
    for _ in range(count - 1):
        result = np.einsum("bij,bkl->bikjl", result, factors).reshape(
            result.shape[0], -1, factors.shape[1] * result.shape[1]
        )
    return result


def _zero_row_vector(params: NoiseParams, num_qubits: int) -> np.ndarray:
    """First row of the recombining splitter layer over the path basis."""
    row = splitter_matrix(params.splitter)[0]
    full = row
    for _ in range(num_qubits - 1):
        full = np.kron(full, row)
    return full


def model_curves(
    num_paths: int, thetas, params: NoiseParams, quantity: str
) -> np.ndarray:
    """Infinite-shot prediction of one quantifier over an angle grid.

    The returned vector holds what the corresponding measurement protocol
    (``estimate_D``, ``estimate_VC`` or ``estimate_VP``) would converge to
    under the given noise parameters; the ideal point reproduces the
    analytic quantifiers.  ``quantity="VP"`` enumerates 2**N binary phase
    settings and is capped at 16 paths.
    """
    if quantity not in QUANTITIES:
        raise ValueError(f"quantity must be one of {QUANTITIES}, got {quantity!r}")
    if (
        not isinstance(num_paths, (int, np.integer))
        or num_paths < 2
        or num_paths & (num_paths - 1)
        or num_paths > _MAX_PATHS
    ):
        raise ValueError(f"num_paths must be a power of two in [2, {_MAX_PATHS}]")
    if quantity == "VP" and num_paths > _VP_MAX_PATHS:
        raise ValueError(
            f"binary-phase enumeration is capped at {_VP_MAX_PATHS} paths"
        )
    if not isinstance(params, NoiseParams):
        raise ValueError(f"params must be NoiseParams, got {params!r}")
    grid = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    if grid.ndim != 1 or grid.size == 0 or not np.all(np.isfinite(grid)):
        raise ValueError("thetas must be a non-empty finite vector")

    num_qubits = int(num_paths).bit_length() - 1
    particle, detector = _pair_reduced_states(grid, params)

    if quantity == "D":
        # readout of reference path k inverts the rotation on the detector
        # qubits named by the bits of k, so the N zero-outcome probabilities
        # are products of two per-qubit values
        half = 0.5 * params.angle_scale * grid
        undo_row = np.stack([np.cos(half), np.sin(half)], axis=1)
        plain = detector[:, 0, 0]
        undone = np.einsum("bi,bij,bj->b", undo_row, detector, undo_row)
        probs = np.stack([plain, undone], axis=1)
        for _ in range(num_qubits - 1):
            probs = np.einsum("bi,bj->bij", probs, np.stack([plain, undone], axis=1))
            probs = probs.reshape(grid.size, -1)
        return np.asarray(
            distinguishability_from_probabilities(probs, num_paths), dtype=np.float64
        )

    reduced = _tensor_power_states(particle, num_qubits)
    closing_row = _zero_row_vector(params, num_qubits)
    if quantity == "VC":
        zero_prob = np.einsum("j,bjk,k->b", closing_row, reduced, closing_row)
        return np.asarray(
            coherence_visibility_from_probability(zero_prob, num_paths),
            dtype=np.float64,
        )
    masks = np.arange(1 << num_paths)
    signs = 1.0 - 2.0 * ((masks[:, None] >> np.arange(num_paths)[None, :]) & 1)
    settings = signs * closing_row[None, :]
    zero_probs = np.empty((grid.size, settings.shape[0]))
    for index in range(grid.size):
        weighted = settings @ reduced[index]
        zero_probs[index] = np.sum(weighted * settings, axis=1)
    return np.asarray(
        purity_visibility_from_probabilities(zero_probs, num_paths), dtype=np.float64
    )


def _normalize_observations(observations) -> list[Observation]:
    items: list[Observation] = []
    for entry in observations:
        if isinstance(entry, Observation):
            items.append(entry)
        else:
            items.append(Observation(*entry))
    if not items:
        raise ValueError("no observations given")
    return items


def _finite_difference_hessian(objective, x: np.ndarray, bounds) -> np.ndarray:
    """Central-difference Hessian with the stencil kept inside the box.

    The stencil center shifts inward when the optimum sits within one step
    of a bound, so curvature estimates there describe a nearby interior
    point rather than the constrained edge.
    """
    steps = np.maximum(1e-5, 1e-3 * np.abs(x))
    center = np.array(
        [
            min(max(xi, lo + hi_step), hi - hi_step)
            for xi, (lo, hi), hi_step in zip(x, bounds, steps)
        ]
    )
    count = x.size
    hessian = np.empty((count, count))
    f0 = objective(center)
    for i in range(count):
        ei = np.zeros(count)
        ei[i] = steps[i]
        for j in range(i, count):
            ej = np.zeros(count)
            ej[j] = steps[j]
            if i == j:
                value = (
                    objective(center + ei) - 2.0 * f0 + objective(center - ei)
                ) / steps[i] ** 2
            else:
                value = (
                    objective(center + ei + ej)
                    - objective(center + ei - ej)
                    - objective(center - ei + ej)
                    + objective(center - ei - ej)
                ) / (4.0 * steps[i] * steps[j])
            hessian[i, j] = value
            hessian[j, i] = value
    return hessian


def fit_noise_params(
    observations,
    num_paths: int,
    free: tuple[bool, bool, bool] = (True, True, True),
    initial: NoiseParams | None = None,
    weighted: bool = True,
    multistarts: int = 8,
    seed: int = 0,
) -> FitResult:
    """Least-squares fit of the noise parameters to quantifier observations.

    ``observations`` is a sequence of ``Observation`` instances or
    ``(theta, quantity, value, sigma)`` tuples.  Fixed parameters (``free``
    entry False) keep the value supplied via ``initial`` (the ideal point by
    default).  The objective is the sum of squared residuals, divided by
    the observation sigmas when ``weighted``.  A bounded Nelder-Mead search
    runs from the initial guess plus ``multistarts - 1`` random interior
    starts; the best optimum is polished and its curvature converted to
    one-sigma parameter uncertainties.

    Every model prediction depends on the splitter amplitude only through
    the unordered pair {T**2, 1 - T**2}, so T and sqrt(1 - T**2) are
    observationally equivalent.  When the splitter is free, the fit reports
    the representative in [1/sqrt(2), 1).
    """
    items = _normalize_observations(observations)
    free = tuple(bool(flag) for flag in free)
    if len(free) != len(PARAM_NAMES):
        raise ValueError(f"free must have {len(PARAM_NAMES)} entries")
    if not any(free):
        raise ValueError("at least one parameter must be free")
    free_slots = [index for index, flag in enumerate(free) if flag]
    if len(items) < len(free_slots):
        raise ValueError(
            f"{len(free_slots)} free parameters need at least that many observations"
        )
    if multistarts < 1:
        raise ValueError("multistarts must be at least 1")
    base = IDEAL_NOISE if initial is None else initial
    if not isinstance(base, NoiseParams):
        raise ValueError(f"initial must be NoiseParams, got {base!r}")

    groups: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    for quantity in QUANTITIES:
        chosen = [item for item in items if item.quantity == quantity]
        if chosen:
            groups[quantity] = (
                np.array([item.theta for item in chosen]),
                np.array([item.value for item in chosen]),
                np.array([item.sigma for item in chosen]),
            )

    base_values = list(base.as_tuple())
    bounds = [PARAM_BOUNDS[slot] for slot in free_slots]

    def unpack(vector: np.ndarray) -> NoiseParams:
        values = list(base_values)
        for slot, value in zip(free_slots, vector):
            values[slot] = float(min(max(value, PARAM_BOUNDS[slot][0]), PARAM_BOUNDS[slot][1]))
        return NoiseParams(*values)

    def objective(vector: np.ndarray) -> float:
        params = unpack(vector)
        total = 0.0
        for quantity, (angles, values, sigmas) in groups.items():
            residual = model_curves(num_paths, angles, params, quantity) - values
            if weighted:
                residual = residual / sigmas
            total += float(np.dot(residual, residual))
        return total

    splitter_position = (
        free_slots.index(1) if free[1] else None
    )

    def canonicalize(vector: np.ndarray) -> np.ndarray:
        if splitter_position is None:
            return vector
        vector = np.array(vector, dtype=np.float64)
        amplitude = vector[splitter_position]
        if amplitude < 2**-0.5:
            vector[splitter_position] = math.sqrt(1.0 - amplitude**2)
        return vector

    rng = np.random.default_rng(seed)
    start_points = [
        np.array([min(max(base_values[slot], lo), hi) for slot, (lo, hi) in zip(free_slots, bounds)])
    ]
    for _ in range(multistarts - 1):
        start_points.append(np.array([rng.uniform(lo, hi) for lo, hi in bounds]))

    solutions = []
    for start in start_points:
        result = minimize(
            objective,
            start,
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": 4000, "maxfev": 6000},
        )
        solutions.append(result)
    best = min(solutions, key=lambda r: r.fun)
    polished = minimize(
        objective,
        canonicalize(best.x),
        method="Nelder-Mead",
        bounds=bounds,
        options={"xatol": 1e-8, "fatol": 1e-14, "maxiter": 4000, "maxfev": 6000},
    )
    if polished.fun > best.fun:
        polished = best
    final_x = canonicalize(polished.x)

    if multistarts == 1:
        converged = bool(polished.success or best.success)
    else:
        agreeing = sum(
            1
            for result in solutions
            if np.max(np.abs(canonicalize(result.x) - final_x)) <= 1e-3
        )
        converged = agreeing >= 2

    fitted = unpack(final_x)
    residual_sum = float(objective(final_x))

    scale = 1.0
    if not weighted:
        dof = max(len(items) - len(free_slots), 1)
        scale = residual_sum / dof
    errors: list[float | None] = [None] * len(PARAM_NAMES)
    try:
        hessian = _finite_difference_hessian(objective, final_x, bounds)
        covariance = 2.0 * scale * np.linalg.inv(hessian)
        diagonal = np.diag(covariance)
        for position, slot in enumerate(free_slots):
            entry = diagonal[position]
            errors[slot] = math.sqrt(entry) if entry > 0.0 else math.nan
    except np.linalg.LinAlgError:
        for slot in free_slots:
            errors[slot] = math.nan

    return FitResult(
        params=fitted,
        free=free,
        std_errors=tuple(errors),
        residual_sum=residual_sum,
        converged=converged,
    )
