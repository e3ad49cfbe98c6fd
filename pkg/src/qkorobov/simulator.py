"""Dense statevector simulation of small quantum circuits.

Conventions used throughout the package:

* Qubits are little-endian: qubit 0 is the least significant bit of the
  basis-state index.  Qubit 0 is "the first qubit" wherever a single wire is
  singled out (the Z observable of ``expectation_z_first``, the
  interferometric test ancilla).
* A ``Gate`` is a dense unitary on one or more named target qubits,
  optionally conditioned on control qubits (each with a required bit value,
  default 1).  A ``Multiplexed`` op applies one of several unitaries to its
  targets, selected by the computational-basis value of an ancilla register;
  branches not listed act as the identity.
* Simulation is exact and dense.  The practical ceiling is width <= 22
  (the statevector alone is 64 MiB there); everything in this package uses
  width <= 12.

Resource accounting expands every op into per-branch controlled primitives
and costs a primitive with ``c`` control/selector wires as ``max(1, c)``
elementary gates on each wire it touches.  This mirrors the ancilla-free
decompositions of multi-controlled gates whose depth grows linearly in the
number of controls; it is what makes select-style circuits report the extra
logarithmic depth factor their elementary-gate compilations carry.  Width-1
circuits contain no controls, so their counts are unaffected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

import numpy as np

UNITARY_ATOL = 1e-12

MAX_DENSE_WIDTH = 22


def _as_unitary(matrix, what: str) -> np.ndarray:
    m = np.array(matrix, dtype=complex)  # own copy, frozen below
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{what} must be square, got shape {m.shape}")
    dim = m.shape[0]
    if dim & (dim - 1) or dim == 0:
        raise ValueError(f"{what} dimension must be a power of two, got {dim}")
    err = np.abs(m.conj().T @ m - np.eye(dim)).max()
    if err > UNITARY_ATOL:
        raise ValueError(f"{what} is not unitary: max |U^dag U - I| = {err:.3e}")
    m.flags.writeable = False
    return m


def _check_disjoint(targets, controls, selector=()):
    seen = set()
    for group, name in ((targets, "targets"), (controls, "controls"), (selector, "selector")):
        for q in group:
            if q < 0:
                raise ValueError(f"negative qubit index in {name}: {q}")
            if q in seen:
                raise ValueError(f"qubit {q} appears in more than one role")
            seen.add(q)


@dataclass(frozen=True, eq=False)
class Gate:
    """Dense unitary on ``targets``, conditioned on ``controls``.

    ``targets[0]`` is the least significant bit of the matrix's row index.
    ``control_values`` gives the required bit per control (defaults to all 1).
    """

    matrix: np.ndarray
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    control_values: tuple[int, ...] = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "controls", tuple(self.controls))
        values = tuple(self.control_values) or (1,) * len(self.controls)
        if len(values) != len(self.controls) or any(v not in (0, 1) for v in values):
            raise ValueError("control_values must be one bit per control")
        object.__setattr__(self, "control_values", values)
        object.__setattr__(self, "matrix", _as_unitary(self.matrix, "gate matrix"))
        if self.matrix.shape[0] != 2 ** len(self.targets):
            raise ValueError(
                f"matrix of dimension {self.matrix.shape[0]} does not fit "
                f"{len(self.targets)} target qubit(s)"
            )
        _check_disjoint(self.targets, self.controls)

    def touched(self) -> tuple[int, ...]:
        return self.targets + self.controls

    def control_count(self) -> int:
        return len(self.controls)


@dataclass(frozen=True, eq=False)
class Multiplexed:
    """Register-selected block unitary.

    ``blocks[j]`` acts on ``targets`` when the ``selector`` register holds the
    basis value ``j`` (``selector[b]`` carries bit ``b`` of ``j``); branch
    values without an entry act as the identity.
    """

    blocks: Mapping[int, np.ndarray]
    selector: tuple[int, ...]
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    control_values: tuple[int, ...] = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "selector", tuple(self.selector))
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "controls", tuple(self.controls))
        values = tuple(self.control_values) or (1,) * len(self.controls)
        if len(values) != len(self.controls) or any(v not in (0, 1) for v in values):
            raise ValueError("control_values must be one bit per control")
        object.__setattr__(self, "control_values", values)
        if not self.selector:
            raise ValueError("multiplexed op needs a non-empty selector register")
        dim = 2 ** len(self.targets)
        checked = {}
        for j, block in dict(self.blocks).items():
            if not 0 <= int(j) < 2 ** len(self.selector):
                raise ValueError(f"branch {j} does not fit the selector register")
            b = _as_unitary(block, f"multiplexer block {j}")
            if b.shape[0] != dim:
                raise ValueError(f"block {j} does not act on {len(self.targets)} qubit(s)")
            checked[int(j)] = b
        object.__setattr__(self, "blocks", checked)
        _check_disjoint(self.targets, self.controls, self.selector)

    def touched(self) -> tuple[int, ...]:
        return self.targets + self.selector + self.controls

    def control_count(self) -> int:
        return len(self.selector) + len(self.controls)


GateOp = Union[Gate, Multiplexed]


def controlled(op: GateOp, control: int, value: int = 1) -> GateOp:
    """Condition ``op`` on one extra control qubit."""
    if control in op.touched():
        raise ValueError(f"control {control} already used by the op")
    kwargs = dict(
        targets=op.targets,
        controls=(control,) + op.controls,
        control_values=(value,) + op.control_values,
        label=op.label,
    )
    if isinstance(op, Gate):
        return Gate(matrix=op.matrix, **kwargs)
    return Multiplexed(blocks=op.blocks, selector=op.selector, **kwargs)


def shifted(op: GateOp, offset: int) -> GateOp:
    """Translate every qubit index of ``op`` by ``offset``."""
    kwargs = dict(
        targets=tuple(q + offset for q in op.targets),
        controls=tuple(q + offset for q in op.controls),
        control_values=op.control_values,
        label=op.label,
    )
    if isinstance(op, Gate):
        return Gate(matrix=op.matrix, **kwargs)
    return Multiplexed(
        blocks=op.blocks,
        selector=tuple(q + offset for q in op.selector),
        **kwargs,
    )


@dataclass
class Circuit:
    """Ordered unitary ops on a fixed-width register."""

    width: int
    ops: list = field(default_factory=list)

    def __post_init__(self):
        if not 0 <= self.width:
            raise ValueError("width must be non-negative")
        ops, self.ops = list(self.ops), []
        for op in ops:
            self.append(op)

    def append(self, op: GateOp) -> "Circuit":
        bad = [q for q in op.touched() if q >= self.width]
        if bad:
            raise ValueError(f"op touches qubit(s) {bad} outside width {self.width}")
        self.ops.append(op)
        return self

    def extend(self, ops: Iterable[GateOp]) -> "Circuit":
        for op in ops:
            self.append(op)
        return self

    def __len__(self) -> int:
        return len(self.ops)


@dataclass(eq=False)
class Statevector:
    """Dense complex amplitudes over the computational basis, little-endian."""

    amplitudes: np.ndarray
    width: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.amplitudes.size != 2 ** self.width:
            raise ValueError(
                f"{self.amplitudes.size} amplitudes do not fill width {self.width}"
            )

    @classmethod
    def zero(cls, width: int) -> "Statevector":
        amps = np.zeros(2 ** width, dtype=complex)
        amps[0] = 1.0
        return cls(amps, width)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


# ---------------------------------------------------------------------------
# gate application

def _axis(width: int, qubit: int) -> int:
    # tensor axis of a qubit when amplitudes are reshaped to [2]*width
    return width - 1 - qubit


def _apply_dense(tensor: np.ndarray, width: int, matrix: np.ndarray,
                 targets: tuple[int, ...], fixed: list[tuple[int, int]]) -> None:
    slicer = [slice(None)] * tensor.ndim
    for q, v in fixed:
        slicer[_axis(width, q)] = slice(v, v + 1)
    slicer = tuple(slicer)
    view = tensor[slicer]
    k = len(targets)
    axes = [_axis(width, q) for q in reversed(targets)]
    moved = np.moveaxis(view, axes, range(k))
    flat = moved.reshape(2 ** k, -1)
    out = (matrix @ flat).reshape(moved.shape)
    tensor[slicer] = np.moveaxis(out, range(k), axes)


def _apply_op(tensor: np.ndarray, width: int, op: GateOp) -> None:
    fixed = list(zip(op.controls, op.control_values))
    if isinstance(op, Gate):
        _apply_dense(tensor, width, op.matrix, op.targets, fixed)
        return
    for j, block in op.blocks.items():
        branch_fixed = fixed + [(q, (j >> b) & 1) for b, q in enumerate(op.selector)]
        _apply_dense(tensor, width, block, op.targets, branch_fixed)


def _validate_op(op: GateOp, width: int) -> None:
    bad = [q for q in op.touched() if q >= width]
    if bad:
        raise ValueError(f"op touches qubit(s) {bad} outside width {width}")


def apply_gate(state: Statevector, op: GateOp) -> Statevector:
    """Return the state after one op; the input state is left untouched."""
    _validate_op(op, state.width)
    amps = state.amplitudes.copy()
    _apply_op(amps.reshape([2] * state.width), state.width, op)
    return Statevector(amps, state.width)


def run_circuit(circuit: Circuit, initial: Statevector | None = None) -> Statevector:
    """Apply all ops of ``circuit`` in order to ``initial`` (default |0...0>)."""
    if initial is None:
        initial = Statevector.zero(circuit.width)
    if initial.width != circuit.width:
        raise ValueError(
            f"state width {initial.width} does not match circuit width {circuit.width}"
        )
    amps = initial.amplitudes.copy()
    if circuit.width == 1:
        # hot path for the width-1 polynomial circuits
        for op in circuit.ops:
            amps = op.matrix @ amps
        return Statevector(amps, 1)
    tensor = amps.reshape([2] * circuit.width)
    for op in circuit.ops:
        _apply_op(tensor, circuit.width, op)
    return Statevector(amps, circuit.width)


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Dense matrix of the whole circuit (column c is the image of |c>)."""
    if circuit.width > 12:
        raise ValueError("dense circuit matrix limited to width <= 12")
    dim = 2 ** circuit.width
    mat = np.eye(dim, dtype=complex)
    if circuit.width == 1:
        for op in circuit.ops:
            mat = op.matrix @ mat
        return mat
    tensor = mat.reshape([2] * circuit.width + [dim])
    for op in circuit.ops:
        _apply_op(tensor, circuit.width, op)
    return mat.reshape(dim, dim)


def expectation_z_first(state: Statevector) -> float:
    """<psi| Z x I x ... x I |psi> with Z on qubit 0."""
    p = np.abs(state.amplitudes) ** 2
    return float(p[0::2].sum() - p[1::2].sum())


# ---------------------------------------------------------------------------
# resource accounting

@dataclass(frozen=True)
class ResourceReport:
    """Width and depth counters for one circuit.

    ``multi_depth`` counts, per qubit, only the primitives that touch two or
    more wires (the text-book depth definition); ``touch_depth`` counts every
    primitive, weighted by the control cost model; ``layered_depth`` is the
    makespan of the as-soon-as-possible schedule under the same weights.
    The three are reported side by side because published depth conventions
    disagree on whether single-qubit gates count.
    """

    width: int
    gate_count: int
    multi_depth: int
    layered_depth: int
    touch_depth: int


def _primitives(circuit: Circuit):
    """Flatten ops to (touched qubits, control count) primitive records."""
    for op in circuit.ops:
        if isinstance(op, Gate):
            yield op.touched(), op.control_count()
        else:
            base = len(op.selector) + len(op.controls)
            for _ in sorted(op.blocks):
                yield op.touched(), base


def qubit_touch_counts(circuit: Circuit) -> tuple[list[int], list[int]]:
    """Per-qubit (multi-qubit-primitive count, weighted touch count)."""
    multi = [0] * circuit.width
    touch = [0] * circuit.width
    for touched, nctrl in _primitives(circuit):
        w = max(1, nctrl)
        wide = len(touched) >= 2
        for q in touched:
            touch[q] += w
            if wide:
                multi[q] += 1
    return multi, touch


def resource_report(circuit: Circuit) -> ResourceReport:
    multi, touch = qubit_touch_counts(circuit)
    gate_count = 0
    finish = [0] * circuit.width
    for touched, nctrl in _primitives(circuit):
        w = max(1, nctrl)
        gate_count += w
        start = max((finish[q] for q in touched), default=0)
        for q in touched:
            finish[q] = start + w
    return ResourceReport(
        width=circuit.width,
        gate_count=gate_count,
        multi_depth=max(multi, default=0),
        layered_depth=max(finish, default=0),
        touch_depth=max(touch, default=0),
    )


# ---------------------------------------------------------------------------
# common matrices

IDENTITY_2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
