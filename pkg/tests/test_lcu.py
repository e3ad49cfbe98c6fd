"""State preparation, select ops, the assembled sandwich, and readout."""

import itertools
import math

import numpy as np
import pytest

from qkorobov.lcu import (
    LcuPlan,
    ancilla_count,
    assemble_lcu,
    direct_amplitude,
    evaluate_via_circuit,
    hadamard_test,
    hadamard_test_circuit,
    multiplexer,
    plan_from_terms,
    prepare_state_unitary,
)
from qkorobov.qsp import bind_signal, chebyshev_circuit
from qkorobov.simulator import (
    Circuit,
    Gate,
    IDENTITY_2,
    PAULI_X,
    PAULI_Z,
    circuit_unitary,
    resource_report,
)
from qkorobov.sparsegrid import chebyshev_expansion, surplus_coefficients

PROD_QUAD_1 = lambda X: X[:, 0] * (1 - X[:, 0])
PROD_QUAD_2 = lambda X: X[:, 0] * (1 - X[:, 0]) * X[:, 1] * (1 - X[:, 1])


def identity_plan(coefficients, signs):
    m = len(coefficients)
    circuits = [Circuit(1, [Gate(IDENTITY_2, (0,))]) for _ in range(m)]
    return LcuPlan(
        coefficients=np.asarray(coefficients, dtype=float),
        term_circuits=circuits,
        term_signs=np.asarray(signs, dtype=float),
        ancilla_count=ancilla_count(m),
        one_norm=float(np.sum(coefficients)),
    )


class TestPrepareState:
    def test_uniform_four(self):
        f = prepare_state_unitary([1.0, 1.0, 1.0, 1.0])
        np.testing.assert_allclose(f[:, 0], [0.5, 0.5, 0.5, 0.5], atol=1e-15)

    def test_three_four_five(self):
        f = prepare_state_unitary([9.0, 16.0])
        np.testing.assert_allclose(f[:, 0], [0.6, 0.8], atol=1e-15)

    def test_single_term(self):
        np.testing.assert_allclose(prepare_state_unitary([2.5]), [[1.0]])

    def test_unitary_and_padding(self):
        rng = np.random.default_rng(8)
        for m in (2, 3, 5, 6, 9):
            a = rng.uniform(0.1, 3.0, size=m)
            f = prepare_state_unitary(a)
            dim = 2 ** ancilla_count(m)
            assert f.shape == (dim, dim)
            np.testing.assert_allclose(f.conj().T @ f, np.eye(dim), atol=1e-12)
            np.testing.assert_allclose(
                f[:m, 0], np.sqrt(a / a.sum()), atol=1e-14
            )
            np.testing.assert_allclose(f[m:, 0], 0.0, atol=1e-15)

    def test_deterministic(self):
        a = [0.3, 1.2, 0.7]
        np.testing.assert_array_equal(
            prepare_state_unitary(a), prepare_state_unitary(a)
        )

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError, match="positive"):
            prepare_state_unitary([1.0, 0.0])
        with pytest.raises(ValueError):
            prepare_state_unitary([])


class TestMultiplexer:
    def test_single_term_is_plain_gate(self):
        op = multiplexer([Circuit(1, [Gate(PAULI_X, (0,))])], [1.0])
        assert isinstance(op, Gate)
        np.testing.assert_allclose(op.matrix, PAULI_X)

    def test_two_term_selector(self):
        circuits = [
            Circuit(1, [Gate(IDENTITY_2, (0,))]),
            Circuit(1, [Gate(PAULI_X, (0,))]),
        ]
        op = multiplexer(circuits, [1.0, 1.0])
        dense = circuit_unitary(Circuit(2, [op]))
        expected = np.eye(4, dtype=complex)
        expected[2:, 2:] = PAULI_X
        np.testing.assert_allclose(dense, expected, atol=1e-14)

    def test_sign_becomes_branch_phase(self):
        circuits = [
            Circuit(1, [Gate(IDENTITY_2, (0,))]),
            Circuit(1, [Gate(IDENTITY_2, (0,))]),
        ]
        op = multiplexer(circuits, [1.0, -1.0])
        dense = circuit_unitary(Circuit(2, [op]))
        expected = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)
        np.testing.assert_allclose(dense, expected, atol=1e-14)

    def test_width_mismatch(self):
        with pytest.raises(ValueError, match="width"):
            multiplexer([Circuit(1), Circuit(2)], [1.0, 1.0])


class TestAssemble:
    def test_single_term_no_ancilla(self):
        plan = plan_from_terms_from_circuit(0.25)
        circuit = assemble_lcu(plan)
        assert circuit.width == 1
        amp = direct_amplitude(circuit)
        assert amp.real == pytest.approx(0.25, abs=1e-14)

    def test_two_identity_terms(self):
        circuit = assemble_lcu(identity_plan([1.0, 1.0], [1.0, 1.0]))
        assert circuit.width == 2
        assert direct_amplitude(circuit).real == pytest.approx(1.0, abs=1e-12)

    def test_cancellation(self):
        circuit = assemble_lcu(identity_plan([1.0, 1.0], [1.0, -1.0]))
        assert abs(direct_amplitude(circuit)) <= 1e-12

    def test_sandwich_matches_dense_select(self):
        # expanded per-gate assembly == (I x F^dag) select (I x F) as matrices
        smap = surplus_coefficients(PROD_QUAD_2, 2, 2)
        terms = chebyshev_expansion(smap, np.array([0.3, 0.45]))
        plan = plan_from_terms(terms, 2)
        assembled = circuit_unitary(assemble_lcu(plan))
        f = prepare_state_unitary(plan.coefficients)
        dim_data = 2 ** plan.data_width
        select = circuit_unitary(
            Circuit(
                plan.data_width + plan.ancilla_count,
                [multiplexer(plan.term_circuits, plan.term_signs)],
            )
        )
        f_full = np.kron(f, np.eye(dim_data))
        np.testing.assert_allclose(
            assembled, f_full.conj().T @ select @ f_full, atol=1e-12
        )

    def test_plan_validation(self):
        with pytest.raises(ValueError, match="positive"):
            identity_plan([1.0, -1.0], [1.0, 1.0])
        with pytest.raises(ValueError, match="one_norm"):
            LcuPlan(
                coefficients=np.array([1.0]),
                term_circuits=[Circuit(1, [Gate(IDENTITY_2, (0,))])],
                term_signs=np.array([1.0]),
                ancilla_count=0,
                one_norm=2.0,
            )


def plan_from_terms_from_circuit(x):
    """Plan with the single degree-1 term bound at x."""
    circ = Circuit(1)
    for op in bind_signal(chebyshev_circuit(1), x).ops:
        circ.append(Gate(op.matrix, (0,), label=op.label))
    return LcuPlan(
        coefficients=np.array([1.0]),
        term_circuits=[circ],
        term_signs=np.array([1.0]),
        ancilla_count=0,
        one_norm=1.0,
    )


class TestHadamardTest:
    def test_z_target(self):
        assert hadamard_test(Circuit(1, [Gate(PAULI_Z, (0,))])) == pytest.approx(1.0)

    def test_x_target(self):
        assert hadamard_test(Circuit(1, [Gate(PAULI_X, (0,))])) == pytest.approx(
            0.0, abs=1e-14
        )

    def test_global_phase(self):
        phase = np.exp(1j * np.pi / 3) * np.eye(2)
        value = hadamard_test(Circuit(1, [Gate(phase, (0,))]))
        assert value == pytest.approx(0.5, abs=1e-14)  # cos(pi/3)

    def test_circuit_width_and_ancilla_position(self):
        target = Circuit(2, [Gate(PAULI_X, (0,)), Gate(PAULI_Z, (1,))])
        wrapped = hadamard_test_circuit(target)
        assert wrapped.width == 3
        assert wrapped.ops[0].targets == (0,)  # leading H on the test qubit

    def test_matches_direct_real_part(self):
        rng = np.random.default_rng(15)
        for _ in range(20):
            z = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            q, r = np.linalg.qr(z)
            u = q * (np.diag(r) / np.abs(np.diag(r)))
            target = Circuit(2, [Gate(u, (0, 1))])
            assert hadamard_test(target) == pytest.approx(
                direct_amplitude(target).real, abs=1e-12
            )


class TestEvaluateViaCircuit:
    def test_d1_fixture(self):
        smap = surplus_coefficients(PROD_QUAD_1, 2, 1)
        value, report = evaluate_via_circuit(smap, np.array([0.125]))
        assert value == pytest.approx(3 / 32, abs=1e-9)
        assert report.width == 4  # 1 data + 2 selector + 1 test

    def test_zero_interpolant(self):
        smap = surplus_coefficients(lambda X: np.zeros(len(X)), 2, 1)
        value, report = evaluate_via_circuit(smap, np.array([0.3]))
        assert value == 0.0
        assert report.width == 0 and report.gate_count == 0

    def test_boundary_point(self):
        smap = surplus_coefficients(PROD_QUAD_1, 2, 1)
        value, _ = evaluate_via_circuit(smap, np.array([0.0]))
        assert value == 0.0

    def test_d2_matches_classical(self):
        smap = surplus_coefficients(PROD_QUAD_2, 2, 2)
        x = np.array([0.3, 0.3])
        value, _ = evaluate_via_circuit(smap, x)
        assert value == pytest.approx(smap.evaluate(x), abs=1e-9)

    def test_normalization_bookkeeping(self):
        rng = np.random.default_rng(77)
        for d, n in itertools.product((1, 2), (1, 2, 3)):
            f = PROD_QUAD_1 if d == 1 else PROD_QUAD_2
            smap = surplus_coefficients(f, n, d)
            for x in rng.random((5, d)):
                terms = chebyshev_expansion(smap, x)
                plan = plan_from_terms(terms, d)
                target = assemble_lcu(plan)
                raw = hadamard_test(target)
                assert plan.one_norm * raw == pytest.approx(
                    smap.evaluate(x), abs=1e-9
                )
                # the two readout routes agree far below that
                assert raw == pytest.approx(direct_amplitude(target).real, abs=1e-12)

    def test_width_formula(self):
        for d, n in itertools.product((1, 2), (1, 2, 3)):
            f = PROD_QUAD_1 if d == 1 else PROD_QUAD_2
            smap = surplus_coefficients(f, n, d)
            x = np.full(d, 1 / 3)
            m = len(chebyshev_expansion(smap, x))
            _, report = evaluate_via_circuit(smap, x)
            assert report.width == d + max(0, math.ceil(math.log2(m))) + 1

    def test_rejects_bad_term_argument(self):
        from qkorobov.sparsegrid import ChebyshevTerm, GridIndex

        bad = ChebyshevTerm(
            weight=1.0, degrees=(1,), arguments=(1.5,), source=GridIndex((1,), (1,))
        )
        with pytest.raises(ValueError, match="support"):
            plan_from_terms([bad], 1)


class TestSyntheticCombinations:
    def test_random_term_data_matches_arithmetic(self):
        # fully synthetic plans: the expected readout is plain arithmetic
        from qkorobov.sparsegrid import ChebyshevTerm, GridIndex

        rng = np.random.default_rng(424242)
        dummy = GridIndex((1,), (1,))
        for _ in range(30):
            d = int(rng.integers(1, 4))
            m = int(rng.integers(1, 10))
            terms = []
            for _ in range(m):
                degrees = tuple(int(k) for k in rng.integers(0, 2, size=d))
                args = tuple(float(u) for u in rng.uniform(-1, 1, size=d))
                weight = float(rng.uniform(0.05, 2.0) * rng.choice([-1.0, 1.0]))
                terms.append(ChebyshevTerm(weight, degrees, args, dummy))
            expected = sum(
                t.weight * np.prod([u ** k for u, k in zip(t.arguments, t.degrees)])
                for t in terms
            )
            plan = plan_from_terms(terms, d)
            target = assemble_lcu(plan)
            got = plan.one_norm * hadamard_test(target)
            assert got == pytest.approx(expected, abs=1e-10)


class TestGateAccounting:
    def test_select_op_count_matches_formula(self):
        # materialised select ops = 2 ||n||_1 + d M, plus F and F^dag
        for d, n in itertools.product((1, 2), (1, 2, 3, 4)):
            f = PROD_QUAD_1 if d == 1 else PROD_QUAD_2
            smap = surplus_coefficients(f, n, d)
            x = np.full(d, 1 / 3)
            terms = chebyshev_expansion(smap, x)
            plan = plan_from_terms(terms, d)
            m = plan.term_count
            degree_norm = sum(sum(t.degrees) for t in terms)
            circuit = assemble_lcu(plan)
            expected = 2 * degree_norm + d * m + (2 if plan.ancilla_count else 0)
            assert len(circuit.ops) == expected
