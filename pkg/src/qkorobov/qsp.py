"""Signal-processing circuits whose matrix entries are Chebyshev polynomials.

The one-qubit signal unitary for a scalar x in [-1, 1] is

    W(x) = [[x, i*sqrt(1-x^2)], [i*sqrt(1-x^2), x]],

and the phased product e^{i phi_0 Z} W(x) e^{i phi_1 Z} ... W(x) e^{i phi_l Z}
realises a degree-l polynomial in its top-left entry.  With all phases zero
the product collapses to W(x)^r, whose entries are the first- and second-kind
Chebyshev polynomials:

    W(x)^r = [[T_r(x), i*sqrt(1-x^2)*U_{r-1}(x)],
              [i*sqrt(1-x^2)*U_{r-1}(x), T_r(x)]]      (U_{-1} := 0).

``chebyshev_circuit`` builds this zero-phase instance as a symbolic width-1
circuit (x is bound later with ``bind_signal``); finding phases for other
target polynomials is out of scope.
"""

from __future__ import annotations

import math

import numpy as np

from .simulator import Circuit, Gate, IDENTITY_2

SIGNAL_LABEL = "signal"
PHASE_LABEL = "phase"


def chebyshev_first_kind(r: int, x):
    """T_r(x) by the three-term recurrence T_r = 2x T_{r-1} - T_{r-2}."""
    if r < 0:
        raise ValueError("degree must be non-negative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if r == 0:
        return prev if prev.ndim else float(prev)
    cur = x.copy()
    for _ in range(r - 1):
        prev, cur = cur, 2.0 * x * cur - prev
    return cur if cur.ndim else float(cur)


def chebyshev_second_kind(r: int, x):
    """U_r(x) with U_0 = 1, U_1 = 2x, U_r = 2x U_{r-1} - U_{r-2}."""
    if r < 0:
        raise ValueError("degree must be non-negative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if r == 0:
        return prev if prev.ndim else float(prev)
    cur = 2.0 * x
    for _ in range(r - 1):
        prev, cur = cur, 2.0 * x * cur - prev
    return cur if cur.ndim else float(cur)


def signal_encoding(x: float) -> np.ndarray:
    """The 2x2 signal unitary W(x); raises for |x| > 1."""
    if abs(x) > 1.0 + 1e-12:
        raise ValueError(f"signal value {x} outside [-1, 1]")
    x = min(1.0, max(-1.0, float(x)))
    s = math.sqrt(max(0.0, 1.0 - x * x))
    return np.array([[x, 1j * s], [1j * s, x]], dtype=complex)


def phase_rotation(phi: float) -> np.ndarray:
    """e^{i phi sigma_z} = diag(e^{i phi}, e^{-i phi})."""
    return np.array([[np.exp(1j * phi), 0.0], [0.0, np.exp(-1j * phi)]], dtype=complex)


def qsp_ansatz(phases, x: float) -> np.ndarray:
    """Alternating product of phase rotations and signal unitaries.

    ``phases`` = (phi_0, ..., phi_l) yields l applications of W(x); a single
    phase gives a bare phase rotation (zero-length signal product).
    """
    phases = tuple(float(p) for p in phases)
    if not phases:
        raise ValueError("phase sequence must contain at least one angle")
    w = signal_encoding(x)
    out = phase_rotation(phases[0])
    for phi in phases[1:]:
        out = out @ w @ phase_rotation(phi)
    return out


def chebyshev_circuit(r: int, include_identity: bool = True) -> Circuit:
    """Width-1 circuit computing T_r in its |0> -> |0> amplitude.

    The circuit is symbolic: r placeholder signal gates interleaved with r+1
    zero-angle phase gates (materialised as explicit identities so the gate
    and depth counts are 2r+1 exactly).  ``bind_signal`` substitutes W(x).
    With ``include_identity=False`` the identity phase gates are dropped and
    only the r signal gates remain.
    """
    if r < 0:
        raise ValueError("degree must be non-negative")
    circuit = Circuit(width=1)
    phase = Gate(IDENTITY_2, targets=(0,), label=PHASE_LABEL)
    signal = Gate(IDENTITY_2, targets=(0,), label=SIGNAL_LABEL)
    if include_identity:
        circuit.append(phase)
    for _ in range(r):
        circuit.append(signal)
        if include_identity:
            circuit.append(phase)
    return circuit


def bind_signal(circuit: Circuit, x: float) -> Circuit:
    """Substitute W(x) for every placeholder signal gate of ``circuit``."""
    w = signal_encoding(x)
    bound: dict[tuple, Gate] = {}  # gates are immutable, share repeats
    ops = []
    for op in circuit.ops:
        if getattr(op, "label", "") == SIGNAL_LABEL:
            key = (op.targets, op.controls, op.control_values)
            if key not in bound:
                bound[key] = Gate(w, *key, label=SIGNAL_LABEL)
            ops.append(bound[key])
        else:
            ops.append(op)
    return Circuit(circuit.width, ops)
