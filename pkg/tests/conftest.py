from pathlib import Path

import numpy as np

from qslice import apply, new_basis_state

FIXTURE_PATH = str(Path(__file__).resolve().parent.parent / "fixtures" / "frontier8.csv")


def run_basis(circuit, index):
    """Apply a permutation circuit to a basis state; return the landing index.

    Asserts that the output really is a basis state (amplitude 1 within 1e-9).
    """
    out = apply(new_basis_state(circuit.num_qubits, index), circuit)
    landed = int(np.argmax(np.abs(out.amplitudes)))
    assert abs(abs(out.amplitudes[landed]) - 1.0) < 1e-9
    return landed


def classical_slice_ids(table, return_min, risk_max):
    """Reference filter on quantized values, the oracle for slicing tests."""
    from qslice import quantize

    s1 = quantize(return_min, table.t)
    s2 = quantize(risk_max, table.t)
    return frozenset(
        rec.id
        for k, rec in enumerate(table.records)
        if table.returns[k] > s1 and table.sigmas[k] < s2
    )
