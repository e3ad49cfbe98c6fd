"""Linear-combination-of-unitaries assembly and interferometric readout.

Given positive coefficients a_1..a_M and term unitaries U_1..U_M (signs are
absorbed into the terms), the combination is realised by sandwiching the
select operation between a state-preparation oracle F and its inverse:

    F|0> = (1/sqrt(||a||_1)) sum_j sqrt(a_j) |j>,
    U_LCU = (I (x) F^dag) (sum_j U_j (x) |j><j|) (I (x) F),

so that <0|U_LCU|0> = (1/||a||_1) sum_j a_j <0|U_j|0>.  The real part of that
amplitude is read out exactly with a one-ancilla Hadamard test; callers
rescale by ||a||_1 classically.

Register layout: data qubits 0..d-1 (coordinate j of the interpolation point
drives qubit j), selector ancillas d..d+s-1 with s = ceil(log2 M), and the
Hadamard-test ancilla in front as qubit 0 of the widened circuit.  The select
operation is materialised gate by gate: every single-qubit gate of every term
circuit becomes one op controlled on the full selector pattern, which is what
gives the assembled circuit the elementary-gate counts of the select-oracle
construction (M = 1 needs no ancilla and no controls).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qsp
from .simulator import (
    Circuit,
    Gate,
    GateOp,
    HADAMARD,
    Multiplexed,
    ResourceReport,
    Statevector,
    circuit_unitary,
    controlled,
    expectation_z_first,
    resource_report,
    run_circuit,
    shifted,
)
from .sparsegrid import ChebyshevTerm, SurplusMap, chebyshev_expansion


def ancilla_count(m: int) -> int:
    """ceil(log2 m) selector qubits; a single term needs none."""
    if m < 1:
        raise ValueError("need at least one term")
    return max(0, math.ceil(math.log2(m)))


def prepare_state_unitary(coefficients) -> np.ndarray:
    """Dense oracle F with F|0> proportional to (sqrt(a_1), ..., sqrt(a_M)).

    The remaining columns are completed deterministically by the Householder
    reflection exchanging |0> with the target column.
    """
    a = np.asarray(coefficients, dtype=float).reshape(-1)
    if a.size == 0:
        raise ValueError("need at least one coefficient")
    if np.any(a <= 0.0):
        raise ValueError("all coefficients must be strictly positive")
    dim = 2 ** ancilla_count(a.size)
    column = np.zeros(dim)
    column[: a.size] = np.sqrt(a / a.sum())
    v = column - np.eye(dim)[:, 0]
    vnorm2 = v @ v
    if vnorm2 < 1e-30:
        return np.eye(dim, dtype=complex)
    f = np.eye(dim) - 2.0 * np.outer(v, v) / vnorm2
    return f.astype(complex)


def multiplexer(term_circuits: Sequence[Circuit], term_signs,
                data_qubits: Sequence[int] | None = None,
                selector: Sequence[int] | None = None) -> GateOp:
    """Single block-diagonal select op: |j> on the ancillas picks sign_j U_j.

    Each term circuit is composed into one dense block.  Selector states
    beyond the term count act as the identity.  With one term the op is the
    bare (signed) block and no selector is attached.
    """
    signs = np.asarray(term_signs, dtype=float).reshape(-1)
    if len(term_circuits) != signs.size or not len(term_circuits):
        raise ValueError("need one sign per term circuit")
    if np.any(np.abs(signs) != 1.0):
        raise ValueError("signs must be +1 or -1")
    d = term_circuits[0].width
    if any(c.width != d for c in term_circuits):
        raise ValueError("term circuits must share the data width")
    data = tuple(data_qubits) if data_qubits is not None else tuple(range(d))
    blocks = {
        j: signs[j] * circuit_unitary(circ) for j, circ in enumerate(term_circuits)
    }
    if len(term_circuits) == 1:
        return Gate(blocks[0], targets=data, label="term-0")
    s = ancilla_count(len(term_circuits))
    sel = tuple(selector) if selector is not None else tuple(range(d, d + s))
    return Multiplexed(blocks=blocks, selector=sel, targets=data, label="select")


@dataclass
class LcuPlan:
    """Everything needed to assemble one combination circuit.

    ``coefficients`` are the positive magnitudes (signs live in
    ``term_signs``), ``term_circuits`` are width-d circuits made of
    single-qubit gates, ``one_norm`` = sum of coefficients.
    """

    coefficients: np.ndarray
    term_circuits: list[Circuit]
    term_signs: np.ndarray
    ancilla_count: int
    one_norm: float

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float).reshape(-1)
        self.term_signs = np.asarray(self.term_signs, dtype=float).reshape(-1)
        m = self.coefficients.size
        if m == 0:
            raise ValueError("a plan needs at least one term")
        if np.any(self.coefficients <= 0.0):
            raise ValueError("plan coefficients must be strictly positive")
        if self.term_signs.size != m or len(self.term_circuits) != m:
            raise ValueError("coefficients, signs, and circuits must align")
        if self.ancilla_count != ancilla_count(m):
            raise ValueError("ancilla_count inconsistent with the term count")
        if abs(self.one_norm - self.coefficients.sum()) > 1e-12 * max(1.0, self.one_norm):
            raise ValueError("one_norm does not match the coefficient sum")

    @property
    def term_count(self) -> int:
        return self.coefficients.size

    @property
    def data_width(self) -> int:
        return self.term_circuits[0].width


def plan_from_terms(terms: Sequence[ChebyshevTerm], d: int,
                    include_identity: bool = True) -> LcuPlan | None:
    """Build the combination plan for signed Chebyshev product terms.

    Per term, coordinate j gets the degree-k_j polynomial circuit bound at
    the term's local argument u_j.  Zero-weight terms are dropped; returns
    None when nothing remains.
    """
    kept = [t for t in terms if t.weight != 0.0]
    if not kept:
        return None
    circuits = []
    for t in kept:
        if len(t.degrees) != d:
            raise ValueError("term dimension does not match d")
        circ = Circuit(width=d)
        for j, (k, u) in enumerate(zip(t.degrees, t.arguments)):
            if abs(u) > 1.0:
                raise ValueError(
                    f"term argument u={u} outside [-1, 1]; support filtering failed"
                )
            for op in qsp.bind_signal(qsp.chebyshev_circuit(k, include_identity), u).ops:
                circ.append(Gate(op.matrix, targets=(j,), label=op.label))
        circuits.append(circ)
    weights = np.array([t.weight for t in kept])
    return LcuPlan(
        coefficients=np.abs(weights),
        term_circuits=circuits,
        term_signs=np.sign(weights),
        ancilla_count=ancilla_count(len(kept)),
        one_norm=float(np.abs(weights).sum()),
    )


def assemble_lcu(plan: LcuPlan) -> Circuit:
    """The full combination circuit on d + ceil(log2 M) qubits.

    Ops are F on the ancillas, then per term and per single-qubit gate one
    selector-controlled op (the sign rides on the term's first gate), then
    F^dag.  <00..0|circuit|00..0> is the combination divided by ||a||_1.
    """
    d = plan.data_width
    m = plan.term_count
    s = plan.ancilla_count
    sel = tuple(range(d, d + s))
    circuit = Circuit(width=d + s)
    if s:
        f = prepare_state_unitary(plan.coefficients)
        circuit.append(Gate(f, targets=sel, label="prepare"))
    for j in range(m):
        sign = plan.term_signs[j]
        for pos, op in enumerate(plan.term_circuits[j].ops):
            mat = op.matrix * (sign if pos == 0 else 1.0)
            if s:
                circuit.append(
                    Multiplexed(
                        blocks={j: mat},
                        selector=sel,
                        targets=op.targets,
                        label=f"term-{j}",
                    )
                )
            else:
                circuit.append(Gate(mat, targets=op.targets, label=f"term-{j}"))
    if s:
        f = prepare_state_unitary(plan.coefficients)
        circuit.append(Gate(f.conj().T, targets=sel, label="unprepare"))
    return circuit


def hadamard_test_circuit(target: Circuit) -> Circuit:
    """One-ancilla interferometer for Re<0|target|0>, ancilla in front."""
    circuit = Circuit(width=target.width + 1)
    h = Gate(HADAMARD, targets=(0,), label="h")
    circuit.append(h)
    for op in target.ops:
        circuit.append(controlled(shifted(op, 1), control=0))
    circuit.append(h)
    return circuit


def hadamard_test(target: Circuit) -> float:
    """Exact Re<0|target|0> via the test circuit's Z expectation."""
    final = run_circuit(hadamard_test_circuit(target))
    return expectation_z_first(final)


def direct_amplitude(target: Circuit) -> complex:
    """<0...0|target|0...0> read straight off the statevector."""
    final = run_circuit(target, Statevector.zero(target.width))
    return complex(final.amplitudes[0])


def evaluate_via_circuit(s: SurplusMap, x, include_identity: bool = True
                         ) -> tuple[float, ResourceReport]:
    """Interpolant value at ``x`` computed by the quantum pipeline.

    Expands the point into signed Chebyshev terms, assembles the combination
    circuit, runs the Hadamard test, and rescales by the weight one-norm.
    Returns the value and the resource report of the executed test circuit
    (width d + ceil(log2 M) + 1).  A point supported by no term (grid lines,
    boundary) yields 0.0 with an empty report.
    """
    plan = plan_from_terms(chebyshev_expansion(s, x), s.d, include_identity)
    if plan is None:
        return 0.0, ResourceReport(0, 0, 0, 0, 0)
    circuit = hadamard_test_circuit(assemble_lcu(plan))
    value = expectation_z_first(run_circuit(circuit))
    return plan.one_norm * value, resource_report(circuit)


def circuit_json_ops(circuit: Circuit) -> list[dict]:
    """JSON-ready trace: ordered primitive ops with row-major [re, im] entries."""
    ops = []
    for op in circuit.ops:
        if isinstance(op, Gate):
            variants = [(op.matrix, list(op.controls), list(op.control_values))]
        else:
            variants = [
                (
                    block,
                    list(op.controls) + list(op.selector),
                    list(op.control_values) + [(j >> b) & 1 for b in range(len(op.selector))],
                )
                for j, block in sorted(op.blocks.items())
            ]
        for matrix, controls, values in variants:
            ops.append(
                {
                    "kind": "unitary",
                    "label": op.label,
                    "targets": list(op.targets),
                    "controls": controls,
                    "control_values": values,
                    "matrix": [[float(z.real), float(z.imag)] for z in matrix.ravel()],
                }
            )
    return ops
