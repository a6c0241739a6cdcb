"""Interferometer circuits over particle and detector qubit registers.

An interferometer over ``N = 2**n`` paths is simulated on ``2n`` qubits: the
particle register (qubits ``[0, n)``) labels the path in binary, and one
detector qubit per particle qubit (qubits ``[n, 2n)``) records which-path
information.  Every circuit starts with a splitter layer over the particle
register and the which-path coupling stage, followed by one of two readouts:

* ``ParticleReadout(phases)``: a diagonal per-path phase layer and a
  recombining splitter layer, measuring the particle register;
* ``DetectorReadout(path)``: the inverse of the detector preparation for one
  reference path, measuring the detector register.

The coupling stage either rotates detector qubit ``n+i`` conditioned on
particle qubit ``i`` (the one-angle rotation family, so path ``j`` prepares a
product of rotations on the detector qubits named by the bits of ``j``), or
applies explicitly supplied per-path detector unitaries conditioned on the
full binary path label.

``NoiseParams`` collects the three hardware imperfections supported by every
circuit: a per-qubit mixing weight for the initial state, an imbalanced
splitter amplitude replacing every balanced splitter, and a multiplicative
scale on the which-path rotation angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .statevec import (
    Controlled,
    DiagonalPhase,
    GateOp,
    MixedState,
    MultiControlled,
    PureState,
    Single,
    State,
    apply_gate,
    init_mixed,
    init_pure,
    outcome_probabilities,
    partial_trace,
)

__all__ = [
    "NoiseParams",
    "IDEAL_NOISE",
    "splitter_matrix",
    "ry",
    "InterferometerSpec",
    "ParticleReadout",
    "DetectorReadout",
    "detector_unitary",
    "build_circuit",
    "run",
    "coupled_state",
    "sweep_particle_distributions",
]


def ry(theta: float) -> np.ndarray:
    """Real rotation by ``theta`` about the Y axis."""
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]])


def splitter_matrix(amplitude: float) -> np.ndarray:
    """Splitter gate ``[[t, s], [s, -t]]`` with ``s = sqrt(1 - t**2)``.

    ``amplitude = 1/sqrt(2)`` gives the balanced (Hadamard) splitter; any
    other value in (0, 1) is an imbalanced splitter.  The matrix squares to
    the identity for every amplitude.
    """
    if not 0.0 < amplitude < 1.0:
        raise ValueError(f"splitter amplitude must lie in (0, 1), got {amplitude}")
    t = float(amplitude)
    s = math.sqrt(1.0 - t * t)
    return np.array([[t, s], [s, -t]])


@dataclass(frozen=True)
class NoiseParams:
    """Hardware imperfection parameters shared by every circuit.

    ``mixing`` is the weight of ``|1><1|`` mixed into each qubit of the
    initial state, ``splitter`` the amplitude of the splitter gate replacing
    every balanced splitter, and ``angle_scale`` multiplies every which-path
    rotation angle, including the inverse rotations of the detector readout.
    Explicitly supplied detector unitaries carry no angle and are not scaled.
    """

    mixing: float = 0.0
    splitter: float = 1.0 / math.sqrt(2.0)
    angle_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.mixing <= 0.5:
            raise ValueError(f"mixing must lie in [0, 0.5], got {self.mixing}")
        if not 0.0 < self.splitter < 1.0:
            raise ValueError(f"splitter must lie in (0, 1), got {self.splitter}")
        if not 0.0 <= self.angle_scale <= 2.0:
            raise ValueError(f"angle_scale must lie in [0, 2], got {self.angle_scale}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.mixing, self.splitter, self.angle_scale)

    @property
    def is_ideal(self) -> bool:
        return self == IDEAL_NOISE


IDEAL_NOISE = NoiseParams()

PARAM_NAMES = ("mixing", "splitter", "angle_scale")


@dataclass(frozen=True, eq=False)
class ParticleReadout:
    """Close the interferometer and measure the particle register.

    ``phases`` (length ``N``, entry ``j`` applied to path ``j``) overrides
    the phases stored on the spec when given.
    """

    phases: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class DetectorReadout:
    """Undo the detector preparation of ``path`` and measure the detectors."""

    path: int


@dataclass(frozen=True, eq=False)
class InterferometerSpec:
    """Static description of one interferometer configuration.

    ``num_paths`` must be a power of two; the simulation uses
    ``2 * log2(num_paths)`` qubits.  When ``detector_unitaries`` is ``None``
    the which-path coupling is the one-angle rotation family at ``theta``;
    otherwise it applies the given per-path unitaries (the unitary for path
    0 must be the identity, matching an undisturbed reference detector).
    """

    num_paths: int
    theta: float = 0.0
    phases: np.ndarray | None = None
    detector_unitaries: tuple[np.ndarray, ...] | None = None
    noise: NoiseParams = field(default_factory=NoiseParams)
    shots: int = 8000
    seed: int = 0

    def __post_init__(self):
        n_paths = self.num_paths
        if (
            not isinstance(n_paths, (int, np.integer))
            or isinstance(n_paths, bool)
            or n_paths < 2
            or n_paths & (n_paths - 1)
        ):
            raise ValueError(f"num_paths must be a power of two >= 2, got {n_paths!r}")
        object.__setattr__(self, "num_paths", int(n_paths))
        if self.num_qubits > 16:
            raise ValueError(
                f"num_paths {n_paths} needs {self.num_qubits} qubits, limit is 16"
            )
        theta = float(self.theta)
        if not math.isfinite(theta):
            raise ValueError(f"theta must be finite, got {theta!r}")
        object.__setattr__(self, "theta", theta)
        phases = np.zeros(n_paths) if self.phases is None else np.array(
            self.phases, dtype=np.float64
        )
        if phases.shape != (n_paths,):
            raise ValueError(
                f"phases must have shape ({n_paths},), got {phases.shape}"
            )
        phases.setflags(write=False)
        object.__setattr__(self, "phases", phases)
        if self.detector_unitaries is not None:
            dim = 1 << self.num_particle_qubits
            units = tuple(
                _frozen_square(u, dim) for u in self.detector_unitaries
            )
            if len(units) != n_paths:
                raise ValueError(
                    f"expected {n_paths} detector unitaries, got {len(units)}"
                )
            if np.max(np.abs(units[0] - np.eye(dim))) > 1e-10:
                raise ValueError("the detector unitary of path 0 must be the identity")
            object.__setattr__(self, "detector_unitaries", units)
        if not isinstance(self.noise, NoiseParams):
            raise ValueError(f"noise must be NoiseParams, got {self.noise!r}")
        if (
            not isinstance(self.shots, (int, np.integer))
            or isinstance(self.shots, bool)
            or self.shots < 1
        ):
            raise ValueError(f"shots must be a positive integer, got {self.shots!r}")
        object.__setattr__(self, "shots", int(self.shots))
        if (
            not isinstance(self.seed, (int, np.integer))
            or isinstance(self.seed, bool)
            or self.seed < 0
        ):
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def num_particle_qubits(self) -> int:
        return self.num_paths.bit_length() - 1

    @property
    def num_qubits(self) -> int:
        return 2 * self.num_particle_qubits

    @property
    def particle_register(self) -> tuple[int, ...]:
        return tuple(range(self.num_particle_qubits))

    @property
    def detector_register(self) -> tuple[int, ...]:
        return tuple(range(self.num_particle_qubits, self.num_qubits))


def _frozen_square(matrix, dim: int) -> np.ndarray:
    m = np.array(matrix, dtype=np.complex128)
    if m.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix, got shape {m.shape}")
    defect = np.max(np.abs(m.conj().T @ m - np.eye(dim)))
    if defect > 1e-10:
        raise ValueError(f"detector matrix is not unitary (defect {defect:.3e})")
    m.setflags(write=False)
    return m


def _kron_power(matrix: np.ndarray, count: int) -> np.ndarray:
    out = np.eye(1)
    for _ in range(count):
        out = np.kron(matrix, out)
    return out


def detector_unitary(spec: InterferometerSpec, path: int) -> np.ndarray:
    """Unitary preparing the detector register for ``path``.

    In the rotation family this is the product of one rotation per set bit
    of ``path`` (matrix index bit ``i`` addressing detector qubit ``n+i``),
    so detector-state overlaps decay with the Hamming distance between path
    labels.
    """
    if not 0 <= path < spec.num_paths:
        raise ValueError(f"path must lie in [0, {spec.num_paths}), got {path}")
    if spec.detector_unitaries is not None:
        return spec.detector_unitaries[path]
    angle = spec.noise.angle_scale * spec.theta
    rotation = ry(angle)
    u = np.eye(1)
    for i in range(spec.num_particle_qubits):
        u = np.kron(rotation if (path >> i) & 1 else np.eye(2), u)
    return u


def _coupling_gates(spec: InterferometerSpec) -> list[GateOp]:
    n = spec.num_particle_qubits
    if spec.detector_unitaries is None:
        rotation = ry(spec.noise.angle_scale * spec.theta)
        return [Controlled(i, 1, n + i, rotation) for i in range(n)]
    gates: list[GateOp] = []
    for path in range(1, spec.num_paths):
        controls = tuple((i, (path >> i) & 1) for i in range(n))
        gates.append(
            MultiControlled(
                controls, spec.detector_register, spec.detector_unitaries[path]
            )
        )
    return gates


def _uncoupling_gates(spec: InterferometerSpec, path: int) -> list[GateOp]:
    n = spec.num_particle_qubits
    if spec.detector_unitaries is None:
        inverse = ry(-spec.noise.angle_scale * spec.theta)
        return [Single(n + i, inverse) for i in range(n) if (path >> i) & 1]
    if path == 0:
        return []
    adjoint = spec.detector_unitaries[path].conj().T
    return [MultiControlled((), spec.detector_register, adjoint)]


def build_circuit(
    spec: InterferometerSpec, variant: ParticleReadout | DetectorReadout
) -> list[GateOp]:
    """Gate list for one readout variant.

    With all phases zero the diagonal phase layer is dropped, so the
    rotation-family particle readout is exactly ``2n`` splitters plus ``n``
    controlled rotations.
    """
    n = spec.num_particle_qubits
    splitter = splitter_matrix(spec.noise.splitter)
    gates: list[GateOp] = [Single(i, splitter) for i in range(n)]
    gates.extend(_coupling_gates(spec))
    if isinstance(variant, ParticleReadout):
        phases = _resolve_phases(spec, variant)
        if np.any(phases != 0.0):
            gates.append(DiagonalPhase(tuple(range(n)), phases))
        gates.extend(Single(i, splitter) for i in range(n))
    elif isinstance(variant, DetectorReadout):
        if not 0 <= variant.path < spec.num_paths:
            raise ValueError(
                f"path must lie in [0, {spec.num_paths}), got {variant.path}"
            )
        gates.extend(_uncoupling_gates(spec, variant.path))
    else:
        raise ValueError(f"unknown readout variant: {variant!r}")
    return gates


def _resolve_phases(spec: InterferometerSpec, variant: ParticleReadout) -> np.ndarray:
    if variant.phases is None:
        return spec.phases
    phases = np.asarray(variant.phases, dtype=np.float64)
    if phases.shape != (spec.num_paths,):
        raise ValueError(
            f"phases must have shape ({spec.num_paths},), got {phases.shape}"
        )
    return phases


def _initial_state(spec: InterferometerSpec) -> State:
    if spec.noise.mixing > 0.0:
        return init_mixed(spec.num_qubits, spec.noise.mixing)
    return init_pure(spec.num_qubits)


def run(
    spec: InterferometerSpec, variant: ParticleReadout | DetectorReadout
) -> np.ndarray:
    """Exact outcome probabilities of the register measured by ``variant``.

    Uses the statevector backend for pure initial states and the density
    matrix backend when the noise model mixes the initial state.
    """
    state = _initial_state(spec)
    for gate in build_circuit(spec, variant):
        apply_gate(state, gate)
    register = (
        spec.particle_register
        if isinstance(variant, ParticleReadout)
        else spec.detector_register
    )
    return outcome_probabilities(state, register)


def coupled_state(spec: InterferometerSpec) -> State:
    """State after the splitter layer and the which-path coupling stage."""
    state = _initial_state(spec)
    splitter = splitter_matrix(spec.noise.splitter)
    for i in range(spec.num_particle_qubits):
        apply_gate(state, Single(i, splitter))
    for gate in _coupling_gates(spec):
        apply_gate(state, gate)
    return state


def sweep_particle_distributions(
    spec: InterferometerSpec, phase_rows, chunk: int = 4096
) -> np.ndarray:
    """Particle-register distributions for many phase settings at once.

    Equivalent to one ``run(spec, ParticleReadout(row))`` per row of
    ``phase_rows`` (shape ``(S, N)``), but the coupled state is computed once
    and the phase layer plus recombination are applied as a batched
    contraction.  Returns an ``(S, N)`` array of probabilities.
    """
    n = spec.num_particle_qubits
    n_paths = spec.num_paths
    rows = np.asarray(phase_rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != n_paths or rows.shape[0] == 0:
        raise ValueError(
            f"phase_rows must have shape (S, {n_paths}) with S >= 1, got {rows.shape}"
        )
    recomb = _kron_power(splitter_matrix(spec.noise.splitter), n)
    state = coupled_state(spec)
    total = rows.shape[0]
    out = np.empty((total, n_paths))
    if isinstance(state, PureState):
        # amplitude layout: detector value indexes rows, path indexes columns
        coupled = state.amplitudes.reshape(1 << n, n_paths)
        step = max(1, min(chunk, (1 << 22) // (n_paths * n_paths)))
        for start in range(0, total, step):
            settings = np.exp(1j * rows[start : start + step])
            closed = np.einsum("oj,sj,dj->sod", recomb, settings, coupled)
            out[start : start + step] = np.sum(
                np.abs(closed) ** 2, axis=2
            )
    else:
        reduced = partial_trace(state, spec.particle_register).matrix
        step = max(1, min(chunk, (1 << 20) // (n_paths * n_paths)))
        for start in range(0, total, step):
            settings = np.exp(1j * rows[start : start + step])
            closed = recomb[None, :, :] * settings[:, None, :]
            out[start : start + step] = np.einsum(
                "soj,jk,sok->so", closed, reduced, closed.conj()
            ).real
    return out
