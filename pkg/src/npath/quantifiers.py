"""Which-path information and interference visibility from detector overlaps.

All quantifiers derive from the matrix of detector-state overlaps
``O[j, k] = <0| U_k^dag U_j |0>`` for an N-path interferometer whose path
``j`` prepares the detector state ``U_j |0>``:

* ``distinguishability``: how well the detector states identify the path,
  ``sqrt(1 - mean of |O[j, k]|^2 over ordered pairs j != k)``.
* ``visibility_purity``: root-mean-square strength of the off-diagonal
  coherences of the reduced path state ``O / N``.  It complements
  distinguishability exactly: ``D**2 + V**2 = 1``.
* ``visibility_coherence``: the largest modulation of the recombined
  zero-outcome probability achievable by tuning the per-path phases.  It
  never exceeds ``visibility_purity`` and meets it exactly when all
  off-diagonal coherences share one modulus.

For real non-negative overlaps (the one-angle rotation family at angles in
``[0, pi]``) the coherence visibility is attained at the all-zero phase
setting; for general overlaps the function returns bracketing bounds and an
optional coordinate-ascent maximisation over the phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import InterferometerSpec, detector_unitary
from .statevec import SimulationError

__all__ = [
    "OverlapMatrix",
    "CoherenceBounds",
    "DualityReport",
    "overlap_matrix",
    "overlap_matrix_for",
    "distinguishability",
    "reduced_particle_state",
    "visibility_purity",
    "visibility_coherence",
    "duality_check",
]

_HERMITIAN_TOL = 1e-10
_REAL_TOL = 1e-10
_PSD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class OverlapMatrix:
    """Validated matrix of detector-state overlaps.

    Entries must form a Hermitian matrix with unit diagonal whose scaled form
    ``values / N`` is positive semidefinite (it is the reduced state of the
    path register, so these are exactly the physical Gram matrices).
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {values.shape}")
        n = values.shape[0]
        if n < 2:
            raise ValueError("an overlap matrix needs at least two paths")
        if np.max(np.abs(values - values.conj().T)) > _HERMITIAN_TOL:
            raise ValueError("overlap matrix must be Hermitian")
        if np.max(np.abs(np.diag(values) - 1.0)) > _HERMITIAN_TOL:
            raise ValueError("overlap matrix must have unit diagonal")
        lowest = np.linalg.eigvalsh(values)[0]
        if lowest < -_PSD_TOL * n:
            raise ValueError(
                f"overlap matrix is not positive semidefinite (eigenvalue {lowest:.3e})"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def num_paths(self) -> int:
        return self.values.shape[0]

    @property
    def is_real(self) -> bool:
        return bool(np.max(np.abs(self.values.imag)) <= _REAL_TOL)


@dataclass(frozen=True)
class CoherenceBounds:
    """Bracketing values for the coherence visibility of complex overlaps."""

    lower: float  # attained at the all-zero phase setting
    upper: float  # triangle-inequality ceiling, exact for one shared modulus
    best: float | None = None  # coordinate-ascent maximum, when requested
    best_phases: np.ndarray | None = None


@dataclass(frozen=True)
class DualityReport:
    """Joint audit of the three quantifiers for one overlap matrix."""

    distinguishability: float
    visibility_coherence: float
    visibility_purity: float
    residual_equality: float  # D**2 + V_P**2 - 1
    residual_inequality: float  # D**2 + V_C**2 - 1
    coherence_is_exact: bool  # True when computed from real overlaps


def overlap_matrix(unitaries: Sequence[np.ndarray]) -> OverlapMatrix:
    """Overlap matrix of the detector states ``U_j |0>``.

    The first unitary must be the identity (the undisturbed reference
    detector); all must share one dimension.
    """
    units = [np.asarray(u, dtype=np.complex128) for u in unitaries]
    if len(units) < 2:
        raise ValueError("need at least two detector unitaries")
    dim = units[0].shape[0]
    for u in units:
        if u.shape != (dim, dim):
            raise ValueError("detector unitaries must share one square shape")
        defect = np.max(np.abs(u.conj().T @ u - np.eye(dim)))
        if defect > 1e-10:
            raise ValueError(f"detector matrix is not unitary (defect {defect:.3e})")
    if np.max(np.abs(units[0] - np.eye(dim))) > 1e-10:
        raise ValueError("the first detector unitary must be the identity")
    columns = np.stack([u[:, 0] for u in units], axis=1)
    gram = columns.conj().T @ columns  # gram[k, j] = <u_k | u_j>
    return OverlapMatrix(gram.T)


def overlap_matrix_for(spec: InterferometerSpec) -> OverlapMatrix:
    """Overlap matrix of a circuit spec's detector preparation stage.

    Reflects the effective rotation angle (including any angle scale from the
    noise parameters); initial-state mixing and splitter imbalance act outside
    the detector preparation and do not enter the overlaps.
    """
    units = [detector_unitary(spec, path) for path in range(spec.num_paths)]
    return overlap_matrix(units)


def _offdiagonal(values: np.ndarray) -> np.ndarray:
    off = values.copy()
    np.fill_diagonal(off, 0.0)
    return off


def distinguishability(overlaps: OverlapMatrix) -> float:
    """Which-path information carried by the detector states."""
    values = overlaps.values
    n = overlaps.num_paths
    mean_sq = np.sum(np.abs(_offdiagonal(values)) ** 2) / (n * (n - 1))
    radicand = 1.0 - mean_sq
    if radicand < -1e-10:
        raise SimulationError(f"distinguishability radicand {radicand!r}")
    return math.sqrt(max(radicand, 0.0))


def reduced_particle_state(overlaps: OverlapMatrix) -> np.ndarray:
    """Reduced state of the path register after which-path coupling."""
    return overlaps.values / overlaps.num_paths


def visibility_purity(overlaps: OverlapMatrix) -> float:
    """Root-mean-square coherence of the reduced path state.

    Evaluated both from the off-diagonal sum and from the purity difference
    with the decohered state; the two must agree to 1e-12.
    """
    n = overlaps.num_paths
    rho = reduced_particle_state(overlaps)
    off_sum = np.sum(np.abs(_offdiagonal(rho)) ** 2)
    from_offdiag = math.sqrt(max(n / (n - 1) * off_sum, 0.0))
    purity = np.sum(np.abs(rho) ** 2)
    purity_incoherent = np.sum(np.diag(rho).real ** 2)
    from_purity = math.sqrt(max(n / (n - 1) * (purity - purity_incoherent), 0.0))
    if abs(from_offdiag - from_purity) > 1e-12:
        raise SimulationError(
            f"purity forms disagree: {from_offdiag!r} vs {from_purity!r}"
        )
    return from_offdiag


def _phase_quadratic(rho: np.ndarray, v: np.ndarray) -> float:
    return float(np.real(v.conj() @ rho @ v))


def _extremize_quadratic(rho, v_start, direction, tol, max_sweeps=500):
    """Coordinate ascent on ``direction * v^dag rho v`` over unit-modulus v."""
    v = v_start.astype(np.complex128).copy()
    n = rho.shape[0]
    current = _phase_quadratic(rho, v)
    for _ in range(max_sweeps):
        for j in range(n):
            w = np.dot(rho[j], v) - rho[j, j] * v[j]
            if abs(w) > 1e-15:
                v[j] = direction * w / abs(w)
        updated = _phase_quadratic(rho, v)
        if abs(updated - current) < tol:
            current = updated
            break
        current = updated
    return current, v


def visibility_coherence(
    overlaps: OverlapMatrix,
    mode: str = "real",
    maximize: bool = False,
    restarts: int = 8,
    tol: float = 1e-8,
    seed: int = 0,
):
    """Largest phase-tunable modulation of the zero-outcome probability.

    ``mode="real"`` requires real overlaps and returns the value at the
    all-zero phase setting, which attains the maximum whenever the
    off-diagonal entries are non-negative (the rotation family at angles in
    ``[0, pi]``).  ``mode="general"`` returns ``CoherenceBounds``; with
    ``maximize=True`` the bounds are supplemented by a coordinate-ascent
    maximisation over per-path phases with random restarts.
    """
    n = overlaps.num_paths
    rho = reduced_particle_state(overlaps)
    off = _offdiagonal(rho)
    lower = abs(np.sum(off)) / (n - 1)
    if mode == "real":
        if not overlaps.is_real:
            raise ValueError("mode='real' requires real overlaps")
        return float(lower)
    if mode != "general":
        raise ValueError(f"mode must be 'real' or 'general', got {mode!r}")
    upper = float(np.sum(np.abs(off)) / (n - 1))
    if not maximize:
        return CoherenceBounds(float(lower), upper)
    rng = np.random.default_rng(seed)
    starts = [np.zeros(n)]
    starts.extend(rng.uniform(0.0, 2 * np.pi, size=n) for _ in range(restarts))
    best = -1.0
    best_phases = None
    for phases in starts:
        v_start = np.exp(1j * phases)
        for direction in (1.0, -1.0):
            quad, v = _extremize_quadratic(rho, v_start, direction, tol)
            value = abs(quad - 1.0) / (n - 1)
            if value > best:
                best = value
                best_phases = np.angle(v)
    return CoherenceBounds(float(lower), upper, float(best), best_phases)


def duality_check(overlaps: OverlapMatrix) -> DualityReport:
    """Compute all three quantifiers and audit their joint constraints.

    Raises ``SimulationError`` if the complementarity identity
    ``D**2 + V_P**2 = 1`` drifts beyond 1e-10 or the coherence visibility
    exceeds the purity visibility.  For complex overlaps the coherence entry
    is its triangle-inequality ceiling, which obeys the same ordering.
    """
    d_value = distinguishability(overlaps)
    v_purity = visibility_purity(overlaps)
    if overlaps.is_real:
        v_coherence = visibility_coherence(overlaps, mode="real")
        exact = True
    else:
        v_coherence = visibility_coherence(overlaps, mode="general").upper
        exact = False
    residual_eq = d_value**2 + v_purity**2 - 1.0
    residual_ineq = d_value**2 + v_coherence**2 - 1.0
    if abs(residual_eq) > 1e-10:
        raise SimulationError(f"duality identity violated by {residual_eq!r}")
    if v_coherence > v_purity + 1e-10:
        raise SimulationError(
            f"coherence visibility {v_coherence!r} exceeds purity visibility {v_purity!r}"
        )
    return DualityReport(
        distinguishability=d_value,
        visibility_coherence=float(v_coherence),
        visibility_purity=v_purity,
        residual_equality=residual_eq,
        residual_inequality=residual_ineq,
        coherence_is_exact=exact,
    )
