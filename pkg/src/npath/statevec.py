"""Statevector and density-matrix backends for small qubit registers.

Basis convention used throughout the package: qubit ``i`` is the i-th
least-significant bit of a basis index, so basis state ``|x>`` assigns qubit
0 the value ``x & 1``.  Multi-qubit gate matrices follow the same rule with
matrix index bit ``i`` addressing ``targets[i]``.

States own their coefficient buffers and ``apply_gate`` mutates them in
place, walking strided views of the buffer instead of materialising a full
register-sized unitary.  A density matrix is updated by treating its flat
buffer as a doubled register: the ket index transforms with the gate matrix,
the bra index with its conjugate.

Gate matrices are checked for unitarity at construction (tolerance 1e-10)
and the state norm (or trace) is re-checked after every application.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "SimulationError",
    "Single",
    "Controlled",
    "MultiControlled",
    "DiagonalPhase",
    "GateOp",
    "PureState",
    "MixedState",
    "State",
    "init_pure",
    "init_mixed",
    "to_mixed",
    "apply_gate",
    "partial_trace",
    "outcome_probabilities",
    "sample_counts",
]

UNITARY_TOL = 1e-10
NORM_TOL = 1e-10


class SimulationError(RuntimeError):
    """A state invariant (normalisation, trace, validity) was violated."""


def _check_index(qubit) -> int:
    if not isinstance(qubit, (int, np.integer)) or isinstance(qubit, bool):
        raise ValueError(f"qubit index must be an integer, got {qubit!r}")
    if qubit < 0:
        raise ValueError(f"qubit index must be non-negative, got {qubit}")
    return int(qubit)


def _frozen_unitary(matrix, dim: int) -> np.ndarray:
    m = np.array(matrix, dtype=np.complex128)
    if m.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix, got shape {m.shape}")
    defect = np.max(np.abs(m.conj().T @ m - np.eye(dim)))
    if defect > UNITARY_TOL:
        raise ValueError(f"matrix is not unitary (defect {defect:.3e})")
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class Single:
    """A one-qubit unitary acting on ``target``."""

    target: int
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "target", _check_index(self.target))
        object.__setattr__(self, "matrix", _frozen_unitary(self.matrix, 2))


@dataclass(frozen=True, eq=False)
class Controlled:
    """A one-qubit unitary on ``target``, applied where ``control`` reads ``polarity``."""

    control: int
    polarity: int
    target: int
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "control", _check_index(self.control))
        object.__setattr__(self, "target", _check_index(self.target))
        if self.polarity not in (0, 1):
            raise ValueError(f"polarity must be 0 or 1, got {self.polarity!r}")
        if self.control == self.target:
            raise ValueError("control and target qubits must differ")
        object.__setattr__(self, "matrix", _frozen_unitary(self.matrix, 2))


@dataclass(frozen=True, eq=False)
class MultiControlled:
    """A unitary on ``targets`` gated by ``controls`` of (qubit, polarity) pairs.

    Matrix index bit ``i`` addresses ``targets[i]``.  An empty control list
    applies the unitary unconditionally.
    """

    controls: tuple[tuple[int, int], ...]
    targets: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        controls = tuple((_check_index(c), int(p)) for c, p in self.controls)
        targets = tuple(_check_index(t) for t in self.targets)
        if not targets:
            raise ValueError("targets must be non-empty")
        for _, polarity in controls:
            if polarity not in (0, 1):
                raise ValueError(f"polarity must be 0 or 1, got {polarity!r}")
        touched = [c for c, _ in controls] + list(targets)
        if len(set(touched)) != len(touched):
            raise ValueError("control and target qubits must be distinct")
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(
            self, "matrix", _frozen_unitary(self.matrix, 2 ** len(targets))
        )


@dataclass(frozen=True, eq=False)
class DiagonalPhase:
    """Multiply each amplitude by ``exp(1j * phases[key])``.

    ``key`` reads the listed qubits, bit ``i`` of the key taking the value of
    ``qubits[i]``, so ``phases`` has length ``2 ** len(qubits)``.
    """

    qubits: tuple[int, ...]
    phases: np.ndarray

    def __post_init__(self):
        qubits = tuple(_check_index(q) for q in self.qubits)
        if not qubits or len(set(qubits)) != len(qubits):
            raise ValueError("qubits must be non-empty and distinct")
        phases = np.array(self.phases, dtype=np.float64)
        if phases.shape != (2 ** len(qubits),):
            raise ValueError(
                f"phases must have length {2 ** len(qubits)}, got shape {phases.shape}"
            )
        phases.setflags(write=False)
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "phases", phases)


GateOp = Union[Single, Controlled, MultiControlled, DiagonalPhase]


@dataclass(eq=False)
class PureState:
    num_qubits: int
    amplitudes: np.ndarray  # complex128, shape (2**num_qubits,)


@dataclass(eq=False)
class MixedState:
    num_qubits: int
    matrix: np.ndarray  # complex128, shape (2**num_qubits, 2**num_qubits)


State = Union[PureState, MixedState]


def _check_num_qubits(num_qubits, max_qubits: int) -> int:
    if not isinstance(num_qubits, (int, np.integer)) or isinstance(num_qubits, bool):
        raise ValueError(f"num_qubits must be an integer, got {num_qubits!r}")
    if num_qubits < 1 or num_qubits > max_qubits:
        raise ValueError(f"num_qubits must be in [1, {max_qubits}], got {num_qubits}")
    return int(num_qubits)


def init_pure(
    num_qubits: int, amplitudes: Sequence[complex] | None = None, max_qubits: int = 16
) -> PureState:
    """All-zeros register, or the given normalised amplitude vector."""
    q = _check_num_qubits(num_qubits, max_qubits)
    dim = 1 << q
    if amplitudes is None:
        amps = np.zeros(dim, dtype=np.complex128)
        amps[0] = 1.0
    else:
        amps = np.array(amplitudes, dtype=np.complex128)
        if amps.shape != (dim,):
            raise ValueError(f"amplitudes must have shape ({dim},), got {amps.shape}")
        if abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise ValueError("amplitudes are not normalised")
    return PureState(q, amps)


def init_mixed(
    num_qubits: int, excited_weights, max_qubits: int = 12
) -> MixedState:
    """Product of per-qubit diagonal mixtures ``(1-w)|0><0| + w|1><1|``.

    ``excited_weights`` is a scalar applied to every qubit or a sequence with
    one weight per qubit, entry ``i`` addressing qubit ``i``.
    """
    q = _check_num_qubits(num_qubits, max_qubits)
    w = np.asarray(excited_weights, dtype=np.float64)
    if w.ndim == 0:
        w = np.full(q, float(w))
    if w.shape != (q,):
        raise ValueError(f"expected {q} weights, got shape {w.shape}")
    if np.any((w < 0.0) | (w > 1.0)):
        raise ValueError("weights must lie in [0, 1]")
    diag = np.array([1.0])
    for wi in w:  # qubit i enters as bit i of the basis index
        diag = np.kron([1.0 - wi, wi], diag)
    return MixedState(q, np.diag(diag).astype(np.complex128))


def to_mixed(state: State) -> MixedState:
    """Density-matrix copy of a state."""
    if isinstance(state, PureState):
        return MixedState(
            state.num_qubits, np.outer(state.amplitudes, state.amplitudes.conj())
        )
    return MixedState(state.num_qubits, state.matrix.copy())


def _apply_unitary(vec, matrix, targets, controls, num_qubits: int) -> None:
    """Apply ``matrix`` on ``targets`` within the control-selected subspace.

    Operates in place on the flat coefficient vector ``vec`` through strided
    views; ``matrix`` index bit ``i`` addresses ``targets[i]``.
    """
    tens = vec.reshape((2,) * num_qubits)  # axis a <-> qubit (num_qubits - 1 - a)

    def axis_of(qubit: int) -> int:
        return num_qubits - 1 - qubit

    if controls:
        selector: list = [slice(None)] * num_qubits
        for qubit, polarity in controls:
            selector[axis_of(qubit)] = polarity
        sub = tens[tuple(selector)]
        fixed = sorted(axis_of(qubit) for qubit, _ in controls)

        def sub_axis(qubit: int) -> int:
            a = axis_of(qubit)
            return a - sum(1 for f in fixed if f < a)

    else:
        sub = tens
        sub_axis = axis_of

    front = [sub_axis(t) for t in reversed(targets)]  # most-significant first
    moved = np.moveaxis(sub, front, range(len(front)))
    block = matrix @ moved.reshape(1 << len(targets), -1)
    moved[...] = block.reshape(moved.shape)


def _gate_parts(gate):
    if isinstance(gate, Single):
        return gate.matrix, (gate.target,), ()
    if isinstance(gate, Controlled):
        return gate.matrix, (gate.target,), ((gate.control, gate.polarity),)
    return gate.matrix, gate.targets, gate.controls


def _gate_qubits(gate) -> tuple[int, ...]:
    if isinstance(gate, Single):
        return (gate.target,)
    if isinstance(gate, Controlled):
        return (gate.control, gate.target)
    if isinstance(gate, MultiControlled):
        return tuple(c for c, _ in gate.controls) + gate.targets
    return gate.qubits


def _phase_factor(gate: DiagonalPhase, num_qubits: int) -> np.ndarray:
    idx = np.arange(1 << num_qubits)
    key = np.zeros_like(idx)
    for i, qubit in enumerate(gate.qubits):
        key |= ((idx >> qubit) & 1) << i
    return np.exp(1j * gate.phases[key])


def apply_gate(state: State, gate: GateOp) -> State:
    """Apply one gate in place and return the state."""
    if not isinstance(gate, (Single, Controlled, MultiControlled, DiagonalPhase)):
        raise ValueError(f"not a gate: {gate!r}")
    q = state.num_qubits
    if max(_gate_qubits(gate)) >= q:
        raise ValueError(
            f"gate addresses qubits {_gate_qubits(gate)} beyond a {q}-qubit register"
        )
    if isinstance(state, PureState):
        if isinstance(gate, DiagonalPhase):
            state.amplitudes *= _phase_factor(gate, q)
        else:
            matrix, targets, controls = _gate_parts(gate)
            _apply_unitary(state.amplitudes, matrix, targets, controls, q)
        norm = np.linalg.norm(state.amplitudes)
        if abs(norm - 1.0) > NORM_TOL:
            raise SimulationError(f"state norm drifted to {norm!r}")
    else:
        rho = state.matrix
        if isinstance(gate, DiagonalPhase):
            f = _phase_factor(gate, q)
            rho *= f[:, None]
            rho *= f.conj()[None, :]
        else:
            matrix, targets, controls = _gate_parts(gate)
            vec = rho.reshape(-1)
            # The flat buffer is a doubled register: the ket (row) index
            # occupies bits [q, 2q) and transforms with the matrix, the bra
            # (column) index occupies bits [0, q) and takes the conjugate.
            _apply_unitary(
                vec,
                matrix,
                tuple(t + q for t in targets),
                tuple((c + q, p) for c, p in controls),
                2 * q,
            )
            _apply_unitary(vec, matrix.conj(), targets, controls, 2 * q)
        trace = np.einsum("ii->", rho).real
        if abs(trace - 1.0) > NORM_TOL:
            raise SimulationError(f"state trace drifted to {trace!r}")
    return state


def partial_trace(state: State, keep: Iterable[int]) -> MixedState:
    """Reduced density matrix on ``keep``; output qubit ``i`` is input ``keep[i]``."""
    if isinstance(state, PureState):
        state = to_mixed(state)
    q = state.num_qubits
    kept = [_check_index(k) for k in keep]
    if not kept or len(set(kept)) != len(kept):
        raise ValueError("keep must be a non-empty list of distinct qubits")
    if any(k >= q for k in kept):
        raise ValueError("keep indices exceed the register")
    tens = state.matrix.reshape((2,) * (2 * q))
    row = {b: b for b in range(q)}
    col = {b: q + b for b in range(q)}
    for b in range(q):
        if b not in kept:
            col[b] = row[b]  # tie bra to ket: summed out by einsum
    subs = [row[q - 1 - a] for a in range(q)] + [col[q - 1 - a] for a in range(q)]
    out = [row[b] for b in reversed(kept)] + [col[b] for b in reversed(kept)]
    m = len(kept)
    reduced = np.einsum(tens, subs, out).reshape(1 << m, 1 << m)
    return MixedState(m, np.ascontiguousarray(reduced))


def outcome_probabilities(state: State, register: Iterable[int]) -> np.ndarray:
    """Marginal Born probabilities over ``register`` (output bit ``i`` = ``register[i]``)."""
    q = state.num_qubits
    reg = [_check_index(r) for r in register]
    if not reg or len(set(reg)) != len(reg):
        raise ValueError("register must be a non-empty list of distinct qubits")
    if any(r >= q for r in reg):
        raise ValueError("register indices exceed the register size")
    if isinstance(state, PureState):
        weights = np.abs(state.amplitudes) ** 2
    else:
        weights = np.einsum("ii->i", state.matrix).real
    tens = weights.reshape((2,) * q)
    subs = [q - 1 - a for a in range(q)]  # label each axis by its qubit number
    out = list(reversed(reg))
    probs = np.einsum(tens, subs, out).reshape(-1)
    total = probs.sum()
    if abs(total - 1.0) > 1e-9:
        raise SimulationError(f"probabilities sum to {total!r}")
    return np.clip(probs, 0.0, None)


def sample_counts(probabilities, shots: int, seed: int) -> np.ndarray:
    """Multinomial outcome counts; deterministic for a fixed seed."""
    p = np.asarray(probabilities, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probabilities must be a non-empty 1-D array")
    if np.any(p < -1e-12):
        raise ValueError("probabilities must be non-negative")
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {total!r}, expected 1")
    if not isinstance(shots, (int, np.integer)) or isinstance(shots, bool) or shots < 0:
        raise ValueError(f"shots must be a non-negative integer, got {shots!r}")
    p = np.clip(p, 0.0, None)
    rng = np.random.default_rng(seed)
    return rng.multinomial(int(shots), p / p.sum())
