import numpy as np
import pytest

from qclearn import ansatz, hardware, linalg
from qclearn.linalg import PAULI_X, PAULI_Z


def test_pair_vdw_drift():
    geom = hardware.pair_geometry(spacing=1.0, c6=0.422)
    h = hardware.drift_hamiltonian(geom)
    assert np.abs(h - np.diag([0.0, 0.0, 0.0, 0.422])).max() < 1e-14
    # sixth-power distance scaling
    far = hardware.pair_geometry(spacing=2.0, c6=0.422)
    assert abs(hardware.drift_hamiltonian(far)[3, 3] - 0.422 / 64.0) < 1e-15


def test_triangle_vdw_drift():
    v = 0.422
    geom = hardware.triangle_geometry(spacing=1.0, c6=v)
    assert geom.n_atoms == 3
    dists = [
        np.linalg.norm(geom.positions[i] - geom.positions[j])
        for i, j in ((0, 1), (0, 2), (1, 2))
    ]
    assert np.abs(np.asarray(dists) - 1.0).max() < 1e-12
    h = hardware.drift_hamiltonian(geom)
    # one pair term per doubly excited pair, all three for |111>
    expected = np.diag([0.0, 0.0, 0.0, v, 0.0, v, v, 3.0 * v])
    assert np.abs(h - expected).max() < 1e-12


def test_dipole_drift():
    geom = hardware.pair_geometry(spacing=2.0, c3=3.5, interaction="dipole")
    h = hardware.drift_hamiltonian(geom)
    v = 3.5 / 8.0
    expected = np.zeros((4, 4), dtype=complex)
    expected[1, 2] = expected[2, 1] = v  # |01><10| + |10><01|
    assert np.abs(h - expected).max() < 1e-14
    assert linalg.is_hermitian(h)


def test_geometry_validation():
    with pytest.raises(ValueError):
        hardware.AtomGeometry(positions=[[0.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        hardware.AtomGeometry(positions=[[0.0, 0.0]], interaction="coulomb")
    with pytest.raises(ValueError):
        hardware.chain_geometry(0)
    chain = hardware.chain_geometry(4, spacing=1.5)
    assert chain.n_atoms == 4
    assert abs(np.linalg.norm(chain.positions[3] - chain.positions[2]) - 1.5) < 1e-12


def test_entangler_phase_example():
    # pair at 1 um with c6 = 0.07 kHz um^6 held for 10 ms: |11> picks up a
    # phase of -0.7 rad, all other basis states are untouched
    geom = hardware.pair_geometry(spacing=1.0, c6=hardware.WEAK_C6)
    u = ansatz.entangling_gate(hardware.drift_hamiltonian(geom), 10.0)
    assert np.abs(np.diag(u) - np.array([1.0, 1.0, 1.0, np.exp(-0.7j)])).max() < 1e-12
    assert np.abs(u - np.diag(np.diag(u))).max() < 1e-14


def test_control_operator_families_and_counts():
    for n in (1, 2, 3):
        assert len(hardware.control_operators(n, "coupling")) == n
        assert len(hardware.control_operators(n, "detuning")) == n
        ops = hardware.control_operators(n, "rotational")
        assert len(ops) == 2 * n
        assert [op.kind for op in ops] == ["coupling"] * n + ["detuning"] * n
    with pytest.raises(ValueError):
        hardware.control_operators(2, "phase")


def test_control_operator_parts_recompose():
    for op in hardware.control_operators(2, "rotational"):
        assert len(op.parts) == 2
        recomposed = sum(coeff * v for coeff, v in op.parts)
        assert np.abs(recomposed - op.matrix).max() < 1e-12
        for _, v in op.parts:
            assert linalg.is_unitary(v, tol=1e-12)
        assert np.abs(op.b - (op.matrix + op.matrix.conj().T)).max() == 0.0


def test_control_operator_rejects_bad_parts():
    q = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    with pytest.raises(ValueError):
        hardware.ControlOperator(qubit=0, kind="coupling", matrix=q, parts=[(1.0, np.eye(2))])
    with pytest.raises(ValueError):
        hardware.ControlOperator(
            qubit=0, kind="coupling", matrix=q, parts=[(0.5, 2 * np.eye(2)), (1.0, q - 0.5 * 2 * np.eye(2))]
        )


def test_coupling_hamiltonian_is_half_rabi_times_x():
    (op,) = hardware.control_operators(1, "coupling")
    omega = 1.3
    h = hardware.control_hamiltonian([op], [omega / 2.0])
    assert np.abs(h - 0.5 * omega * PAULI_X).max() < 1e-14
    # second atom of a pair
    ops = hardware.control_operators(2, "coupling")
    h = hardware.control_hamiltonian(ops, [0.0, 0.7])
    assert np.abs(h - 0.7 * np.kron(np.eye(2), PAULI_X)).max() < 1e-14


def test_detuning_hamiltonian_sign_convention():
    # channel value z = -Delta / 2 realizes the laser term -Delta |1><1|
    (op,) = hardware.control_operators(1, "detuning")
    delta = 0.9
    h = hardware.control_hamiltonian([op], [-delta / 2.0])
    assert np.abs(h - (-delta) * np.diag([0.0, 1.0])).max() < 1e-14
    assert np.abs(op.b - (np.eye(2) - PAULI_Z)).max() < 1e-14


def test_control_hamiltonian_validation():
    ops = hardware.control_operators(2, "rotational")
    with pytest.raises(ValueError):
        hardware.control_hamiltonian(ops, [0.1, 0.2])
