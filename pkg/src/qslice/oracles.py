"""Threshold oracles over phase-encoded value tables, plus the Grover operator.

An oracle marks list indices whose values satisfy a condition. Values are
t-bit integers b_k standing for the fractions s_k = b_k / 2**t, phase-encoded
by a diagonal unitary and recovered exactly into an estimate register by
phase estimation (exact because the values are exact t-bit fractions). A
reversible comparator then writes the condition bit, and with the oracle
qubit prepared in |->, index k picks up the phase (-1)**predicate(k). All
working registers are uncomputed.

Two backends realise the Grover iteration:

* dense - the full circuit on a statevector (bounded by the qubit cap);
* effective - exact evolution of the index-register amplitudes alone, valid
  whenever the phase encoding is exact, which it is here by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from . import comparators
from .sim import (
    Circuit,
    Gate,
    StateVector,
    h,
    phase,
    phase_estimation_circuit,
    remap,
    x,
)

#: Effective-backend index registers beyond this are refused (2**24 floats).
EFFECTIVE_INDEX_CAP = 24


# ---------------------------------------------------------------------------
# Value tables
# ---------------------------------------------------------------------------


class ValueTable:
    """N = 2**n quantized values, each a t-bit integer representing b/2**t."""

    def __init__(self, bits: int, values: Sequence[int]):
        if bits < 1:
            raise ValueError("bits must be >= 1")
        vals = tuple(int(v) for v in values)
        if len(vals) < 2 or len(vals) & (len(vals) - 1):
            raise ValueError(f"table length {len(vals)} is not a power of two, >= 2")
        limit = 1 << bits
        for v in vals:
            if not 0 <= v < limit:
                raise ValueError(f"value {v} does not fit in {bits} bits")
        self.bits = bits
        self.values = vals

    @property
    def n(self) -> int:
        return (len(self.values) - 1).bit_length()

    @property
    def size(self) -> int:
        return len(self.values)

    def fractions(self) -> np.ndarray:
        """The encoded values as exact fractions in [0, 1)."""
        return np.asarray(self.values, dtype=float) / float(1 << self.bits)

    def padded(self, sentinel: int) -> "ValueTable":
        """Double the table, filling the upper half with a sentinel value."""
        return ValueTable(self.bits, self.values + (int(sentinel),) * self.size)

    def __getitem__(self, k: int) -> int:
        return self.values[k]

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ValueTable):
            return NotImplemented
        return self.bits == other.bits and self.values == other.values

    def __hash__(self) -> int:
        return hash((self.bits, self.values))

    def __repr__(self) -> str:
        return f"ValueTable(bits={self.bits}, n={self.n}, values={self.values!r})"


# ---------------------------------------------------------------------------
# Register layout and oracle container
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegisterLayout:
    """Named, disjoint qubit registers covering an oracle circuit."""

    num_qubits: int
    registers: tuple[tuple[str, tuple[int, ...]], ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for _, qubits in self.registers:
            for q in qubits:
                if q in seen:
                    raise ValueError(f"qubit {q} assigned to two registers")
                if not 0 <= q < self.num_qubits:
                    raise ValueError(f"qubit {q} outside the layout")
                seen.add(q)
        if len(seen) != self.num_qubits:
            raise ValueError("registers do not cover the circuit")

    def __getitem__(self, name: str) -> tuple[int, ...]:
        for reg_name, qubits in self.registers:
            if reg_name == name:
                return qubits
        raise KeyError(name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.registers)

    @property
    def index(self) -> tuple[int, ...]:
        return self["index"]

    def to_dict(self) -> dict:
        out: dict = {"num_qubits": self.num_qubits}
        out["registers"] = {name: list(qubits) for name, qubits in self.registers}
        return out


class OracleCircuit:
    """A marking circuit plus its register layout and classical predicate.

    The gate-level circuit is built lazily so that effective-backend searches
    (which only need the predicate and the layout) stay cheap.
    """

    def __init__(
        self,
        layout: RegisterLayout,
        predicate: Callable[[int], bool],
        circuit_builder: Callable[[], Circuit],
        prep_builder: Callable[[], Circuit],
        doubled_builder: Callable[[], "OracleCircuit"] | None = None,
        description: str = "",
    ):
        self.layout = layout
        self.predicate = predicate
        self._circuit_builder = circuit_builder
        self._prep_builder = prep_builder
        self._doubled_builder = doubled_builder
        self.description = description

    @property
    def num_qubits(self) -> int:
        return self.layout.num_qubits

    @property
    def index_bits(self) -> int:
        return len(self.layout.index)

    @property
    def index_size(self) -> int:
        return 1 << self.index_bits

    @cached_property
    def circuit(self) -> Circuit:
        return self._circuit_builder()

    @cached_property
    def prep_circuit(self) -> Circuit:
        return self._prep_builder()

    @cached_property
    def marked_set(self) -> frozenset[int]:
        if self.index_bits > EFFECTIVE_INDEX_CAP:
            raise ValueError(
                f"{self.index_bits} index bits exceed the effective-backend cap"
            )
        return frozenset(k for k in range(self.index_size) if self.predicate(k))

    def doubled(self) -> "OracleCircuit":
        """The same condition on a doubled index space, upper half sentinel-padded.

        Guarantees at most half of the (new) search space is marked.
        """
        if self._doubled_builder is None:
            raise ValueError("oracle does not support doubling")
        return self._doubled_builder()

    def __repr__(self) -> str:
        return f"OracleCircuit({self.description}, qubits={self.num_qubits})"


def _prep_gates(
    index: Sequence[int],
    thresholds: Sequence[tuple[Sequence[int], int]] = (),
    oracle_qubit: int | None = None,
) -> list[Gate]:
    """Uniform index register, |S> threshold registers, |-> oracle qubit."""
    gates: list[Gate] = [h(q) for q in index]
    for register, value in thresholds:
        for j, q in enumerate(register):
            if (value >> j) & 1:
                gates.append(x(q))
    if oracle_qubit is not None:
        gates.append(x(oracle_qubit))
        gates.append(h(oracle_qubit))
    return gates


# ---------------------------------------------------------------------------
# Oracle builders
# ---------------------------------------------------------------------------

_COMPARATORS = {
    "gt": (comparators.gt_circuit, lambda v, s: v > s),
    "lt": (comparators.lt_circuit, lambda v, s: v < s),
    "eq": (comparators.eq_circuit, lambda v, s: v == s),
}


def single_list_oracle(
    table: ValueTable, threshold: int, op: str = "gt"
) -> OracleCircuit:
    """Mark indices k with table[k] <op> threshold; layout size n + 2t + 1.

    The circuit is phase estimation of the value unitary into a t-qubit
    estimate register, a comparator against the threshold register with the
    oracle qubit as outcome, then exact uncomputation of the estimate.
    """
    if op not in _COMPARATORS:
        raise ValueError(f"op must be one of {sorted(_COMPARATORS)}")
    t = table.bits
    n = table.n
    if not 0 <= threshold < (1 << t):
        raise ValueError(f"threshold {threshold} does not fit in {t} bits")

    index = tuple(range(n))
    estimate = tuple(range(n, n + t))
    thr_reg = tuple(range(n + t, n + 2 * t))
    oracle_qubit = n + 2 * t
    nq = n + 2 * t + 1
    layout = RegisterLayout(
        nq,
        (
            ("index", index),
            ("estimate", estimate),
            ("threshold", thr_reg),
            ("oracle", (oracle_qubit,)),
        ),
    )
    build_cmp, classical = _COMPARATORS[op]

    def build() -> Circuit:
        pe = phase_estimation_circuit(estimate, table.fractions(), index, nq)
        cmp_local = build_cmp(t)
        mapping = {i: estimate[i] for i in range(t)}
        mapping.update({t + i: thr_reg[i] for i in range(t)})
        mapping[2 * t] = oracle_qubit
        cmp_circ = remap(cmp_local, mapping, nq)
        return pe.then(cmp_circ).then(pe.inverse())

    def prep() -> Circuit:
        return Circuit(nq, tuple(_prep_gates(index, [(thr_reg, threshold)], oracle_qubit)))

    return OracleCircuit(
        layout,
        lambda k: classical(table[k], threshold),
        build,
        prep,
        doubled_builder=lambda: single_list_oracle(
            table.padded(_sentinel_for(op, threshold, t)), threshold, op
        ),
        description=f"single-list {op} S={threshold}",
    )


def _sentinel_for(op: str, threshold: int, bits: int) -> int:
    """A padding value that can never satisfy the condition."""
    if op == "gt":
        return 0
    if op == "lt":
        return (1 << bits) - 1
    return 0 if threshold != 0 else 1


def two_list_oracle(
    returns: ValueTable, sigmas: ValueTable, s1: int, s2: int
) -> OracleCircuit:
    """Mark indices with returns[k] > s1 AND sigmas[k] < s2; size 2n + 4t + 3.

    The index register is fanned out into a copy via CX so the two phase
    estimations run on separate registers; two greater-than comparators
    write flag qubits, an AND flips the |-> oracle qubit, and everything is
    uncomputed in reverse.
    """
    if returns.bits != sigmas.bits or returns.n != sigmas.n:
        raise ValueError("the two tables must share index size and resolution")
    t = returns.bits
    n = returns.n
    for name, s in (("s1", s1), ("s2", s2)):
        if not 0 <= s < (1 << t):
            raise ValueError(f"{name}={s} does not fit in {t} bits")

    index = tuple(range(n))
    copy = tuple(range(n, 2 * n))
    r_est = tuple(range(2 * n, 2 * n + t))
    r_thr = tuple(range(2 * n + t, 2 * n + 2 * t))
    r_flag = 2 * n + 2 * t
    s_est = tuple(range(2 * n + 2 * t + 1, 2 * n + 3 * t + 1))
    s_thr = tuple(range(2 * n + 3 * t + 1, 2 * n + 4 * t + 1))
    s_flag = 2 * n + 4 * t + 1
    oracle_qubit = 2 * n + 4 * t + 2
    nq = 2 * n + 4 * t + 3
    layout = RegisterLayout(
        nq,
        (
            ("index", index),
            ("index_copy", copy),
            ("return_estimate", r_est),
            ("return_threshold", r_thr),
            ("return_flag", (r_flag,)),
            ("risk_estimate", s_est),
            ("risk_threshold", s_thr),
            ("risk_flag", (s_flag,)),
            ("oracle", (oracle_qubit,)),
        ),
    )

    def build() -> Circuit:
        fanout = Circuit(nq, tuple(x(copy[i], {index[i]}) for i in range(n)))
        pe_r = phase_estimation_circuit(r_est, returns.fractions(), index, nq)
        pe_s = phase_estimation_circuit(s_est, sigmas.fractions(), copy, nq)
        gt = comparators.gt_circuit(t)
        # returns[k] > s1: operand A is the estimate, B the threshold
        map1 = {i: r_est[i] for i in range(t)}
        map1.update({t + i: r_thr[i] for i in range(t)})
        map1[2 * t] = r_flag
        cmp1 = remap(gt, map1, nq)
        # s2 > sigmas[k]: operand A is the threshold, B the estimate
        map2 = {i: s_thr[i] for i in range(t)}
        map2.update({t + i: s_est[i] for i in range(t)})
        map2[2 * t] = s_flag
        cmp2 = remap(gt, map2, nq)
        compute = fanout.then(pe_r).then(pe_s).then(cmp1).then(cmp2)
        combine = Circuit(nq, (x(oracle_qubit, {r_flag, s_flag}),))
        return compute.then(combine).then(compute.inverse())

    def prep() -> Circuit:
        return Circuit(
            nq,
            tuple(_prep_gates(index, [(r_thr, s1), (s_thr, s2)], oracle_qubit)),
        )

    def predicate(k: int) -> bool:
        return returns[k] > s1 and sigmas[k] < s2

    return OracleCircuit(
        layout,
        predicate,
        build,
        prep,
        doubled_builder=lambda: two_list_oracle(
            returns.padded(0), sigmas.padded((1 << t) - 1), s1, s2
        ),
        description=f"two-list r>{s1} and sigma<{s2}",
    )


def direct_marking_oracle(n: int, marked: Iterable[int]) -> OracleCircuit:
    """Phase-flip oracle on an explicit marked set; layout is n index qubits only."""
    if n < 1:
        raise ValueError("n must be >= 1")
    marked_set = frozenset(int(k) for k in marked)
    size = 1 << n
    for k in marked_set:
        if not 0 <= k < size:
            raise ValueError(f"marked index {k} out of range for n={n}")
    index = tuple(range(n))
    layout = RegisterLayout(n, (("index", index),))
    turns = [0.5 if k in marked_set else 0.0 for k in range(size)]

    def build() -> Circuit:
        return Circuit(n, (phase(index, turns),))

    def prep() -> Circuit:
        return Circuit(n, tuple(h(q) for q in index))

    return OracleCircuit(
        layout,
        lambda k: k in marked_set,
        build,
        prep,
        doubled_builder=lambda: direct_marking_oracle(n + 1, marked_set),
        description=f"direct marking of {sorted(marked_set)}",
    )


# ---------------------------------------------------------------------------
# Condition trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    """A single threshold comparison against one value table."""

    op: str
    table: ValueTable
    threshold: int

    def __post_init__(self) -> None:
        if self.op not in _COMPARATORS:
            raise ValueError(f"op must be one of {sorted(_COMPARATORS)}")
        if not 0 <= self.threshold < (1 << self.table.bits):
            raise ValueError("threshold out of range for the table resolution")

    def evaluate(self, k: int) -> bool:
        return _COMPARATORS[self.op][1](self.table[k], self.threshold)


def greater_than(table: ValueTable, threshold: int) -> Atom:
    return Atom("gt", table, threshold)


def less_than(table: ValueTable, threshold: int) -> Atom:
    return Atom("lt", table, threshold)


def equals(table: ValueTable, threshold: int) -> Atom:
    return Atom("eq", table, threshold)


@dataclass(frozen=True)
class AllOf:
    children: tuple

    def evaluate(self, k: int) -> bool:
        return all(c.evaluate(k) for c in self.children)


@dataclass(frozen=True)
class AnyOf:
    children: tuple

    def evaluate(self, k: int) -> bool:
        return any(c.evaluate(k) for c in self.children)


Condition = Atom | AllOf | AnyOf


def all_of(*children: Condition) -> AllOf:
    return AllOf(tuple(children))


def any_of(*children: Condition) -> AnyOf:
    return AnyOf(tuple(children))


def _condition_atoms(cond: Condition) -> list[Atom]:
    if isinstance(cond, Atom):
        return [cond]
    atoms: list[Atom] = []
    for c in cond.children:
        atoms.extend(_condition_atoms(c))
    return atoms


def condition_oracle(cond: Condition) -> OracleCircuit:
    """Compile an AND/OR tree of threshold atoms into a marking oracle.

    Each atom gets an estimate register, a threshold register and a flag
    qubit; internal tree nodes get one ancilla each; the root combiner
    targets the |-> oracle qubit and all intermediate results are uncomputed.
    Single atoms compile to the plain single-list layout.
    """
    if isinstance(cond, Atom):
        return single_list_oracle(cond.table, cond.threshold, cond.op)
    atoms = list(dict.fromkeys(_condition_atoms(cond)))  # one block per distinct atom
    if not atoms:
        raise ValueError("condition has no atoms")
    n = atoms[0].table.n
    t = atoms[0].table.bits
    for a in atoms:
        if a.table.n != n or a.table.bits != t:
            raise ValueError("all atoms must share index size and resolution")
    if isinstance(cond, (AllOf, AnyOf)) and len(cond.children) < 2:
        raise ValueError("combinators need at least two children")

    index = tuple(range(n))
    cursor = n
    registers: list[tuple[str, tuple[int, ...]]] = [("index", index)]
    atom_regs: list[tuple[tuple[int, ...], tuple[int, ...], int]] = []
    for i in range(len(atoms)):
        est = tuple(range(cursor, cursor + t))
        thr = tuple(range(cursor + t, cursor + 2 * t))
        flag = cursor + 2 * t
        cursor += 2 * t + 1
        registers.append((f"estimate_{i}", est))
        registers.append((f"threshold_{i}", thr))
        registers.append((f"flag_{i}", (flag,)))
        atom_regs.append((est, thr, flag))

    internal: list[Condition] = []
    node_qubit: dict[int, int] = {}
    for node in _walk(cond):
        # a node object may appear several times in the tree; compute it once
        if isinstance(node, Atom) or node is cond or id(node) in node_qubit:
            continue
        internal.append(node)
        registers.append((f"node_{len(node_qubit)}", (cursor,)))
        node_qubit[id(node)] = cursor
        cursor += 1
    oracle_qubit = cursor
    registers.append(("oracle", (oracle_qubit,)))
    nq = cursor + 1
    layout = RegisterLayout(nq, tuple(registers))

    def bit_of(node: Condition) -> int:
        if isinstance(node, Atom):
            return atom_regs[atoms.index(node)][2]
        return node_qubit[id(node)]

    def combiner(node: AllOf | AnyOf, target: int) -> Circuit:
        inputs = list(dict.fromkeys(bit_of(c) for c in node.children))
        make = comparators.and_combiner if isinstance(node, AllOf) else comparators.or_combiner
        return make(inputs, target, nq)

    def build() -> Circuit:
        parts: list[Circuit] = []
        for atom, (est, thr, flag) in zip(atoms, atom_regs):
            pe = phase_estimation_circuit(est, atom.table.fractions(), index, nq)
            cmp_local = _COMPARATORS[atom.op][0](t)
            mapping = {i: est[i] for i in range(t)}
            mapping.update({t + i: thr[i] for i in range(t)})
            mapping[2 * t] = flag
            parts.append(pe.then(remap(cmp_local, mapping, nq)).then(pe.inverse()))
        for node in reversed(internal):  # children before parents
            parts.append(combiner(node, node_qubit[id(node)]))
        compute = parts[0]
        for p in parts[1:]:
            compute = compute.then(p)
        root = combiner(cond, oracle_qubit)
        return compute.then(root).then(compute.inverse())

    def prep() -> Circuit:
        thresholds = [
            (thr, atom.threshold) for atom, (_, thr, _) in zip(atoms, atom_regs)
        ]
        return Circuit(nq, tuple(_prep_gates(index, thresholds, oracle_qubit)))

    return OracleCircuit(
        layout,
        cond.evaluate,
        build,
        prep,
        doubled_builder=lambda: condition_oracle(_double_condition(cond)),
        description="condition tree",
    )


def _walk(cond: Condition):
    yield cond
    if not isinstance(cond, Atom):
        for c in cond.children:
            yield from _walk(c)


def _double_condition(cond: Condition) -> Condition:
    if isinstance(cond, Atom):
        sentinel = _sentinel_for(cond.op, cond.threshold, cond.table.bits)
        return Atom(cond.op, cond.table.padded(sentinel), cond.threshold)
    kind = AllOf if isinstance(cond, AllOf) else AnyOf
    return kind(tuple(_double_condition(c) for c in cond.children))


# ---------------------------------------------------------------------------
# Diffusion and the Grover operator
# ---------------------------------------------------------------------------


def diffusion_circuit(n: int, qubits: Sequence[int] | None = None, num_qubits: int | None = None) -> Circuit:
    """Exact reflection 2|psi><psi| - I about the uniform state on n qubits.

    A trailing global half-turn record cancels the sign of the textbook
    H X MCZ X H construction, so the operator carries no phase slack; that
    matters once the circuit is controlled for counting.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    reg = tuple(qubits) if qubits is not None else tuple(range(n))
    if len(reg) != n:
        raise ValueError("qubit list length must equal n")
    nq = (max(reg) + 1) if num_qubits is None else num_qubits
    gates: list[Gate] = [h(q) for q in reg]
    gates.extend(x(q) for q in reg)
    gates.append(phase((reg[-1],), (0.0, 0.5), controls=set(reg[:-1])))
    gates.extend(x(q) for q in reg)
    gates.extend(h(q) for q in reg)
    gates.append(phase((), (0.5,)))
    return Circuit(nq, tuple(gates))


def grover_operator(oracle: OracleCircuit) -> Circuit:
    """Oracle followed by diffusion on the index register."""
    diff = diffusion_circuit(
        oracle.index_bits, oracle.layout.index, oracle.num_qubits
    )
    return oracle.circuit.then(diff)


# ---------------------------------------------------------------------------
# Effective backend: exact index-subspace simulation
# ---------------------------------------------------------------------------


@dataclass
class EffectiveState:
    """Index-register amplitudes only; exact while the oracle's phase encoding is."""

    amplitudes: np.ndarray

    @property
    def size(self) -> int:
        return int(self.amplitudes.size)

    def probabilities(self) -> np.ndarray:
        return self.amplitudes**2

    def copy(self) -> "EffectiveState":
        return EffectiveState(self.amplitudes.copy())


def effective_state_new(n: int) -> EffectiveState:
    """Uniform superposition over 2**n indices."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > EFFECTIVE_INDEX_CAP:
        raise ValueError(f"n={n} exceeds the effective-backend cap {EFFECTIVE_INDEX_CAP}")
    size = 1 << n
    return EffectiveState(np.full(size, 1.0 / math.sqrt(size)))


def effective_grover_step(state: EffectiveState, marked: Iterable[int]) -> EffectiveState:
    """One Grover iteration: negate marked amplitudes, reflect all about the mean."""
    amps = state.amplitudes.copy()
    idx = np.fromiter((int(k) for k in marked), dtype=np.int64)
    if idx.size:
        amps[idx] *= -1.0
    return EffectiveState(2.0 * amps.mean() - amps)


def index_amplitudes(state: StateVector, oracle: OracleCircuit) -> np.ndarray:
    """Project a dense workspace state onto the index register.

    Contracts the state against the reference ancilla configuration
    (thresholds, zeroed work registers, |-> oracle qubit) and checks that no
    amplitude leaked outside it, which holds exactly when uncomputation is
    exact.
    """
    n = oracle.index_bits
    if oracle.layout.index != tuple(range(n)):
        raise ValueError("index register must occupy the low qubits")
    anc_qubits = state.num_qubits - n
    if anc_qubits == 0:
        return state.amplitudes.copy()
    ref = _ancilla_reference(oracle, anc_qubits)
    mat = state.amplitudes.reshape(1 << anc_qubits, 1 << n)
    coeffs = ref.conj() @ mat
    residual = mat - np.outer(ref, coeffs)
    leak = float(np.linalg.norm(residual))
    if leak > 1e-9:
        raise RuntimeError(f"workspace leaked {leak} outside the reference ancilla state")
    return coeffs


def _ancilla_reference(oracle: OracleCircuit, anc_qubits: int) -> np.ndarray:
    n = oracle.index_bits
    base = 0
    for name, qubits in oracle.layout.registers:
        if name.startswith("threshold") or name.endswith("threshold"):
            value = _threshold_value_from_prep(oracle, qubits)
            for j, q in enumerate(qubits):
                if (value >> j) & 1:
                    base |= 1 << (q - n)
    ref = np.zeros(1 << anc_qubits, dtype=np.complex128)
    oracle_reg = None
    for name, qubits in oracle.layout.registers:
        if name == "oracle":
            oracle_reg = qubits[0]
    if oracle_reg is None:
        ref[base] = 1.0
        return ref
    bit = 1 << (oracle_reg - n)
    ref[base] = 1.0 / math.sqrt(2.0)
    ref[base | bit] = -1.0 / math.sqrt(2.0)
    return ref


def _threshold_value_from_prep(oracle: OracleCircuit, qubits: tuple[int, ...]) -> int:
    value = 0
    reg = {q: j for j, q in enumerate(qubits)}
    for g in oracle.prep_circuit.gates:
        if g.kind == "X" and not g.controls and g.targets[0] in reg:
            value |= 1 << reg[g.targets[0]]
    return value
