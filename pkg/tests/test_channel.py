import numpy as np
import pytest
import scipy.stats

from qclearn import channel, lindblad, linalg


def random_density(dim, rng):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_channel(dim_a, dim_b, seed):
    u = scipy.stats.unitary_group.rvs(dim_a * dim_b, random_state=seed)
    return channel.StinespringChannel(u, dim_a, dim_b)


def test_channel_validation():
    with pytest.raises(ValueError):
        channel.StinespringChannel(2.0 * np.eye(4), 2, 2)  # not unitary
    with pytest.raises(ValueError):
        channel.StinespringChannel(np.eye(4), 2, 3)  # dims do not match the matrix
    with pytest.raises(ValueError):
        channel.StinespringChannel(np.eye(4), 4, 0)
    c = channel.StinespringChannel(np.eye(6), 2, 3)
    assert c.dim == 6 and c.ancillas_consumed == 0


def test_kraus_of_exact_decay_dilation():
    gamma, t = 0.5, 0.25
    e = np.exp(-0.5 * gamma * t)
    s = np.sqrt(1.0 - np.exp(-gamma * t))
    ks = channel.kraus_from_unitary(lindblad.exact_dilation_single_decay(gamma, t), 2, 2)
    assert ks.shape == (2, 2, 2)
    assert np.abs(ks[0] - np.diag([1.0, e])).max() < 1e-14
    assert np.abs(ks[1] - np.array([[0.0, -s], [0.0, 0.0]])).max() < 1e-14


def test_kraus_completeness():
    for seed, (da, db) in ((0, (2, 2)), (1, (2, 4)), (2, (3, 2))):
        c = random_channel(da, db, seed)
        ks = channel.kraus_operators(c)
        acc = sum(linalg.dag(k) @ k for k in ks)
        assert np.abs(acc - np.eye(da)).max() < 1e-12


def test_apply_identity_channel_and_counter():
    c = channel.StinespringChannel(np.eye(4), 2, 2)
    rng = np.random.default_rng(41)
    rho = random_density(2, rng)
    out = channel.apply(c, rho)
    assert np.abs(out - rho).max() < 1e-14
    assert c.ancillas_consumed == 1
    channel.apply(c, rho)
    assert c.ancillas_consumed == 2
    with pytest.raises(ValueError):
        channel.apply(c, np.eye(3))


def test_apply_matches_superoperator_and_is_linear():
    rng = np.random.default_rng(42)
    c = random_channel(2, 4, seed=3)
    s = channel.superoperator(c)
    rho1, rho2 = random_density(2, rng), random_density(2, rng)
    out1 = channel.apply(c, rho1)
    assert np.abs(linalg.vec(out1) - s @ linalg.vec(rho1)).max() < 1e-12
    # linearity
    mix = channel.apply(c, 0.3 * rho1 + 0.7 * rho2)
    parts = 0.3 * out1 + 0.7 * channel.apply(c, rho2)
    assert np.abs(mix - parts).max() < 1e-11


def test_apply_preserves_state_properties():
    rng = np.random.default_rng(43)
    for seed, (da, db) in ((4, (2, 2)), (5, (4, 2))):
        c = random_channel(da, db, seed)
        for _ in range(3):
            out = channel.apply(c, random_density(da, rng))
            assert abs(np.trace(out) - 1.0) < 1e-12
            assert linalg.is_hermitian(out, tol=1e-12)
            assert np.linalg.eigvalsh(out).min() > -1e-12


def test_extrapolate_matches_repeated_apply():
    rng = np.random.default_rng(44)
    c = random_channel(2, 2, seed=6)
    rho0 = random_density(2, rng)
    states = channel.extrapolate(c, rho0, 5)
    assert len(states) == 5 and c.ancillas_consumed == 5
    current = rho0
    c2 = random_channel(2, 2, seed=6)
    for n in range(5):
        current = channel.apply(c2, current)
        assert np.abs(states[n] - current).max() < 1e-11
    assert channel.extrapolate(c, rho0, 0) == []
    with pytest.raises(ValueError):
        channel.extrapolate(c, rho0, -1)


def test_extrapolated_decay_channel_is_exact_semigroup():
    gamma, dt = 0.5, 0.25
    c = channel.StinespringChannel(lindblad.exact_dilation_single_decay(gamma, dt), 2, 2)
    rng = np.random.default_rng(45)
    rho0 = random_density(2, rng)
    states = channel.extrapolate(c, rho0, 10)
    for n, rho_n in enumerate(states, start=1):
        exact = lindblad.analytic_single_qubit(rho0, gamma, 0.0, n * dt)
        assert np.abs(rho_n - exact).max() < 1e-10


def test_choi_of_identity_channel():
    c = channel.StinespringChannel(np.eye(2), 2, 1)
    choi = channel.choi_matrix(c)
    w = np.array([1.0, 0.0, 0.0, 1.0])
    assert np.abs(choi - np.outer(w, w)).max() < 1e-14  # dim_a * projector on |phi+>


def test_cp_and_tp_checks():
    for seed, (da, db) in ((7, (2, 2)), (8, (2, 4)), (9, (3, 2))):
        c = random_channel(da, db, seed)
        assert channel.is_completely_positive(c)
        assert channel.is_trace_preserving(c)
        assert np.linalg.eigvalsh(channel.choi_matrix(c)).min() >= -1e-10

    # transpose map: Choi is the swap operator, which is not PSD
    swap = np.zeros((4, 4))
    swap[0, 0] = swap[3, 3] = swap[1, 2] = swap[2, 1] = 1.0
    assert not channel.is_completely_positive(swap)
    assert channel.is_trace_preserving(swap)

    # keeping only one Kraus operator of a decaying channel breaks trace preservation
    gamma, t = 0.5, 0.25
    k0 = np.diag([1.0, np.exp(-0.5 * gamma * t)])
    w = k0.T.reshape(-1)
    assert not channel.is_trace_preserving(np.outer(w, w.conj()))
