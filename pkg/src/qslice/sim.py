"""Dense statevector simulator: gate records, circuits, measurement, QFT, phase estimation.

Conventions used throughout the package:

* Qubit 0 is the least significant bit of a basis index, so the basis state
  written ``|q2 q1 q0>`` has integer index ``q0 + 2*q1 + 4*q2``.
* A register is an ordered list of qubit indices, least significant first:
  a register ``[a, b, c]`` holding the integer ``v`` stores bit ``j`` of
  ``v`` on the ``j``-th listed qubit.
* Diagonal phase tables are given in *turns* (multiples of 2*pi), all
  entries in ``[0, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

#: Largest dense register we will allocate: 2**26 complex doubles is 1 GiB.
DENSE_QUBIT_CAP = 26

#: Absolute tolerance for state comparisons and unitarity checks.
ATOL = 1e-9

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class CapacityError(RuntimeError):
    """A dense allocation would exceed the configured qubit cap."""


# ---------------------------------------------------------------------------
# Gate records and circuits
# ---------------------------------------------------------------------------

KIND_X = "X"
KIND_H = "H"
KIND_UNITARY = "UNITARY"
KIND_PHASE = "PHASE"

_KINDS = (KIND_X, KIND_H, KIND_UNITARY, KIND_PHASE)


@dataclass(frozen=True)
class Gate:
    """One reversible operation: a (controlled) X, H, 2x2 unitary or diagonal phase.

    ``targets`` is a single qubit for X/H/UNITARY and a register (possibly
    empty, meaning a global phase) for PHASE. ``controls`` may be any set of
    additional qubits; the gate acts only where all controls are 1.
    """

    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    matrix: tuple[tuple[complex, complex], tuple[complex, complex]] | None = None
    turns: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        touched = self.targets + self.controls
        if len(set(touched)) != len(touched):
            raise ValueError(f"gate qubits must be distinct, got {touched}")
        if any(q < 0 for q in touched):
            raise ValueError("qubit indices must be non-negative")
        if self.kind in (KIND_X, KIND_H):
            if len(self.targets) != 1:
                raise ValueError(f"{self.kind} takes exactly one target")
        elif self.kind == KIND_UNITARY:
            if len(self.targets) != 1:
                raise ValueError("UNITARY takes exactly one target")
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (2, 2):
                raise ValueError("UNITARY matrix must be 2x2")
            if not np.allclose(m.conj().T @ m, np.eye(2), atol=ATOL):
                raise ValueError("UNITARY matrix is not unitary")
        else:  # PHASE
            if self.turns is None or len(self.turns) != 1 << len(self.targets):
                raise ValueError("PHASE table length must be 2**len(targets)")
            if any(not (0.0 <= t < 1.0) for t in self.turns):
                raise ValueError("PHASE entries must lie in [0, 1) turns")

    def inverse(self) -> "Gate":
        if self.kind in (KIND_X, KIND_H):
            return self
        if self.kind == KIND_UNITARY:
            m = np.asarray(self.matrix, dtype=complex).conj().T
            return Gate(KIND_UNITARY, self.targets, self.controls, _as_matrix_tuple(m))
        turns = tuple(_wrap_turn(-t) for t in self.turns)
        return Gate(KIND_PHASE, self.targets, self.controls, turns=turns)

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + self.controls


def _as_matrix_tuple(m: np.ndarray) -> tuple:
    return tuple(tuple(complex(v) for v in row) for row in m)


def _wrap_turn(t: float) -> float:
    # t % 1.0 can round up to exactly 1.0 for tiny negative inputs
    wrapped = float(t) % 1.0
    return 0.0 if wrapped >= 1.0 else wrapped


def x(target: int, controls: Iterable[int] = ()) -> Gate:
    """(Multi-)controlled NOT; with no controls a plain X."""
    return Gate(KIND_X, (target,), tuple(sorted(controls)))


def h(target: int, controls: Iterable[int] = ()) -> Gate:
    return Gate(KIND_H, (target,), tuple(sorted(controls)))


def unitary(target: int, matrix: np.ndarray, controls: Iterable[int] = ()) -> Gate:
    return Gate(
        KIND_UNITARY,
        (target,),
        tuple(sorted(controls)),
        _as_matrix_tuple(np.asarray(matrix, dtype=complex)),
    )


def phase(targets: Sequence[int], turns: Sequence[float], controls: Iterable[int] = ()) -> Gate:
    """Diagonal phase over a register; ``turns[v]`` applies to register value v.

    An empty target register with a one-entry table is a global phase,
    useful because it becomes a relative phase once controlled.
    """
    table = tuple(_wrap_turn(t) for t in turns)
    return Gate(KIND_PHASE, tuple(targets), tuple(sorted(controls)), turns=table)


def z(target: int, controls: Iterable[int] = ()) -> Gate:
    return phase((target,), (0.0, 0.5), controls)


@dataclass(frozen=True)
class Circuit:
    """An ordered, reversible sequence of gate records over a fixed qubit count."""

    num_qubits: int
    gates: tuple[Gate, ...]

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            for q in g.qubits:
                if q >= self.num_qubits:
                    raise ValueError(
                        f"gate touches qubit {q} but circuit has {self.num_qubits} qubits"
                    )

    def inverse(self) -> "Circuit":
        return Circuit(self.num_qubits, tuple(g.inverse() for g in reversed(self.gates)))

    def then(self, other: "Circuit") -> "Circuit":
        if other.num_qubits != self.num_qubits:
            raise ValueError("qubit counts differ")
        return Circuit(self.num_qubits, self.gates + other.gates)

    def __len__(self) -> int:
        return len(self.gates)


def format_circuit(circuit: Circuit) -> str:
    """Stable one-gate-per-line debug dump, suitable for golden tests."""
    lines = []
    for g in circuit.gates:
        lines.append(
            f"{g.kind} controls={list(g.controls)} targets={list(g.targets)}"
        )
    return "\n".join(lines)


def remap(circuit: Circuit, mapping: dict[int, int] | Sequence[int], num_qubits: int) -> Circuit:
    """Relabel circuit qubits; ``mapping[old] = new``. Unmapped qubits keep their index."""
    if not isinstance(mapping, dict):
        mapping = {i: q for i, q in enumerate(mapping)}
    gates = []
    for g in circuit.gates:
        gates.append(
            Gate(
                g.kind,
                tuple(mapping.get(q, q) for q in g.targets),
                tuple(sorted(mapping.get(q, q) for q in g.controls)),
                g.matrix,
                g.turns,
            )
        )
    return Circuit(num_qubits, tuple(gates))


def controlled(circuit: Circuit, controls: Iterable[int]) -> Circuit:
    """Add a control set to every gate: identity unless all controls are 1.

    The controls must not overlap any qubit the circuit touches; the result
    is widened to cover them.
    """
    controls = tuple(sorted(controls))
    used = set()
    for g in circuit.gates:
        used.update(g.qubits)
    overlap = used.intersection(controls)
    if overlap:
        raise ValueError(f"controls {sorted(overlap)} overlap the circuit's qubits")
    nq = max(circuit.num_qubits, max(controls) + 1) if controls else circuit.num_qubits
    gates = [
        Gate(g.kind, g.targets, tuple(sorted(g.controls + controls)), g.matrix, g.turns)
        for g in circuit.gates
    ]
    return Circuit(nq, tuple(gates))


# ---------------------------------------------------------------------------
# State vectors
# ---------------------------------------------------------------------------


@dataclass
class StateVector:
    """Dense array of 2**num_qubits complex amplitudes, kept L2-normalised."""

    num_qubits: int
    amplitudes: np.ndarray

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def new_basis_state(num_qubits: int, basis_index: int, cap: int = DENSE_QUBIT_CAP) -> StateVector:
    """Computational basis state |basis_index> on ``num_qubits`` qubits."""
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    if num_qubits > cap:
        raise CapacityError(
            f"{num_qubits} qubits exceeds the dense simulation cap of {cap}"
        )
    dim = 1 << num_qubits
    if not 0 <= basis_index < dim:
        raise ValueError(f"basis_index {basis_index} out of range for {num_qubits} qubits")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[basis_index] = 1.0
    return StateVector(num_qubits, amps)


def _controlled_view(tensor: np.ndarray, num_qubits: int, controls: Sequence[int]):
    """View of the all-controls-one subspace plus a qubit->view-axis resolver."""
    index: list = [slice(None)] * num_qubits
    for c in controls:
        index[num_qubits - 1 - c] = 1
    view = tensor[tuple(index)]
    control_axes = sorted(num_qubits - 1 - c for c in controls)

    def axis(qubit: int) -> int:
        a = num_qubits - 1 - qubit
        return a - sum(1 for ca in control_axes if ca < a)

    return view, axis


def _slices(ndim: int, ax: int, bit: int) -> tuple:
    sel: list = [slice(None)] * ndim
    sel[ax] = bit
    return tuple(sel)


def _apply_gate(tensor: np.ndarray, num_qubits: int, gate: Gate) -> None:
    view, axis = _controlled_view(tensor, num_qubits, gate.controls)
    if gate.kind == KIND_X:
        ax = axis(gate.targets[0])
        lo, hi = _slices(view.ndim, ax, 0), _slices(view.ndim, ax, 1)
        tmp = view[lo].copy()
        view[lo] = view[hi]
        view[hi] = tmp
    elif gate.kind == KIND_H:
        ax = axis(gate.targets[0])
        lo, hi = _slices(view.ndim, ax, 0), _slices(view.ndim, ax, 1)
        a0 = view[lo].copy()
        a1 = view[hi].copy()
        view[lo] = (a0 + a1) * _INV_SQRT2
        view[hi] = (a0 - a1) * _INV_SQRT2
    elif gate.kind == KIND_UNITARY:
        m = np.asarray(gate.matrix, dtype=complex)
        ax = axis(gate.targets[0])
        lo, hi = _slices(view.ndim, ax, 0), _slices(view.ndim, ax, 1)
        a0 = view[lo].copy()
        a1 = view[hi].copy()
        view[lo] = m[0, 0] * a0 + m[0, 1] * a1
        view[hi] = m[1, 0] * a0 + m[1, 1] * a1
    else:  # PHASE
        factors = np.exp(2j * np.pi * np.asarray(gate.turns))
        axes = [axis(q) for q in gate.targets]
        for value in range(len(factors)):
            sel: list = [slice(None)] * view.ndim
            for j, ax in enumerate(axes):
                sel[ax] = (value >> j) & 1
            view[tuple(sel)] *= factors[value]


def apply(state: StateVector, circuit: Circuit) -> StateVector:
    """Apply every gate in order; returns a new, norm-checked state."""
    if circuit.num_qubits != state.num_qubits:
        raise ValueError(
            f"circuit has {circuit.num_qubits} qubits, state has {state.num_qubits}"
        )
    amps = state.amplitudes.copy()
    tensor = amps.reshape((2,) * state.num_qubits)
    for gate in circuit.gates:
        _apply_gate(tensor, state.num_qubits, gate)
    out = StateVector(state.num_qubits, amps)
    if abs(out.norm() - 1.0) > ATOL:
        raise RuntimeError(f"norm drifted to {out.norm()!r} after circuit application")
    return out


# ---------------------------------------------------------------------------
# Measurement
# ---------------------------------------------------------------------------


def _check_register(state_qubits: int, qubits: Sequence[int]) -> None:
    if len(qubits) == 0:
        raise ValueError("register must be non-empty")
    if len(set(qubits)) != len(qubits):
        raise ValueError("register qubits must be distinct")
    for q in qubits:
        if not 0 <= q < state_qubits:
            raise ValueError(f"qubit {q} out of range")


def subregister_distribution(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Exact marginal distribution over the given register, LSB-first order."""
    _check_register(state.num_qubits, qubits)
    probs = state.probabilities()
    idx = np.arange(probs.size, dtype=np.int64)
    sub = np.zeros(probs.size, dtype=np.int64)
    for j, q in enumerate(qubits):
        sub |= ((idx >> q) & 1) << j
    return np.bincount(sub, weights=probs, minlength=1 << len(qubits))


def measure_subregister(
    state: StateVector, qubits: Sequence[int], rng: np.random.Generator
) -> tuple[int, StateVector]:
    """Sample the register's marginal, collapse and renormalise.

    Deterministic for a fixed generator state.
    """
    dist = subregister_distribution(state, qubits)
    total = dist.sum()
    if total < 1e-12:
        raise RuntimeError("register marginal is numerically zero")
    outcome = int(rng.choice(dist.size, p=dist / total))

    idx = np.arange(state.amplitudes.size, dtype=np.int64)
    sub = np.zeros(state.amplitudes.size, dtype=np.int64)
    for j, q in enumerate(qubits):
        sub |= ((idx >> q) & 1) << j
    amps = np.where(sub == outcome, state.amplitudes, 0.0)
    norm = np.linalg.norm(amps)
    if norm < 1e-12:
        raise RuntimeError("collapse produced a numerically zero state")
    return outcome, StateVector(state.num_qubits, amps / norm)


# ---------------------------------------------------------------------------
# QFT and phase estimation
# ---------------------------------------------------------------------------


def qft_circuit(register: Sequence[int], num_qubits: int | None = None) -> Circuit:
    """Quantum Fourier transform on a register (LSB-first): |b> -> sum_k w^{bk}|k>/sqrt(2^t)."""
    reg = list(register)
    if not reg:
        raise ValueError("register must be non-empty")
    t = len(reg)
    nq = max(reg) + 1 if num_qubits is None else num_qubits
    gates: list[Gate] = []
    for i in reversed(range(t)):
        gates.append(h(reg[i]))
        for k in reversed(range(i)):
            gates.append(phase((reg[i],), (0.0, 1.0 / (1 << (i - k + 1))), controls={reg[k]}))
    for i in range(t // 2):
        a, b = reg[i], reg[t - 1 - i]
        gates.extend((x(b, {a}), x(a, {b}), x(b, {a})))
    return Circuit(nq, tuple(gates))


def inverse_qft_circuit(register: Sequence[int], num_qubits: int | None = None) -> Circuit:
    """Inverse QFT on the register; gate count is O(t**2)."""
    return qft_circuit(register, num_qubits).inverse()


def phase_estimation_circuit(
    counting: int | Sequence[int],
    phase_turns: Sequence[float],
    target_register: Sequence[int],
    num_qubits: int | None = None,
) -> Circuit:
    """Phase estimation of a diagonal unitary given by its per-index phase table.

    The counting register may be passed as an explicit qubit list or as an
    integer t, in which case it is allocated directly above the target
    register. Controlled powers U^(2^j) are realised as diagonal gates with
    the table multiplied by 2^j (mod 1). For a target basis state whose
    phase is an exact t-bit fraction b/2^t the counting register ends
    exactly in |b>.
    """
    target = list(target_register)
    if not target:
        raise ValueError("target register must be non-empty")
    table = np.asarray(phase_turns, dtype=float)
    if table.size != 1 << len(target):
        raise ValueError(
            f"phase table has {table.size} entries, expected {1 << len(target)}"
        )
    if isinstance(counting, (int, np.integer)):
        base = max(target) + 1
        count_reg = list(range(base, base + int(counting)))
    else:
        count_reg = list(counting)
    if not count_reg:
        raise ValueError("counting register must be non-empty")
    if set(count_reg) & set(target):
        raise ValueError("counting and target registers overlap")

    nq = max(max(count_reg), max(target)) + 1 if num_qubits is None else num_qubits
    gates: list[Gate] = [h(c) for c in count_reg]
    for j, cq in enumerate(count_reg):
        shifted = np.mod(table * float(1 << j), 1.0)
        gates.append(phase(tuple(target), shifted.tolist(), controls={cq}))
    gates.extend(inverse_qft_circuit(count_reg, nq).gates)
    return Circuit(nq, tuple(gates))


def qpe_register_size(m: int, epsilon: float) -> int:
    """Counting qubits for m-bit accuracy at failure probability epsilon."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    return m + math.ceil(math.log2(2.0 + 1.0 / (2.0 * epsilon)))
