import numpy as np
import pytest

from decolab import bipartite as bp
from decolab import sieve
from decolab.errors import ConsistencyError, DimensionError, InputError
from decolab.gates import cnot, swap
from decolab.linops import projector
from decolab.sampling import haar_unitary, random_density, rng_for, two_qubit_corpus

from helpers import KET0, KET1, PLUS

CNOT = bp.UnitaryChannel.square(cnot(), 2)


def test_entropy_examples():
    assert abs(sieve.von_neumann_entropy(projector(PLUS))) < 1e-12
    assert abs(sieve.von_neumann_entropy(np.eye(2) / 2) - np.log(2)) < 1e-12
    for d in (2, 3, 5):
        assert abs(sieve.von_neumann_entropy(np.eye(d) / d) - np.log(d)) < 1e-12


def test_entropy_rejects_non_states():
    with pytest.raises(InputError):
        sieve.von_neumann_entropy(np.diag([1.0, 1.0]))
    with pytest.raises(InputError):
        sieve.von_neumann_entropy(np.diag([1.5, -0.5]))


def test_cnot_losses():
    mixed = np.eye(2) / 2
    assert abs(sieve.predictability_loss(CNOT, projector(KET0), projector(KET0))) < 1e-12
    assert abs(sieve.predictability_loss(CNOT, mixed, projector(KET0))) < 1e-12
    assert abs(sieve.predictability_loss(CNOT, mixed, projector(KET1))) < 1e-12
    assert abs(sieve.predictability_loss(CNOT, projector(KET0), projector(PLUS)) - np.log(2)) < 1e-12
    # |+> on F is a fixed point of X, so nothing leaks
    assert abs(sieve.predictability_loss(CNOT, projector(PLUS), projector(PLUS))) < 1e-12


def test_pacc_pure_states_lose_nothing():
    rng = rng_for(50)
    states = [projector(KET0), projector(KET1)]
    for _ in range(20):
        rho_f = random_density(2, rng)
        for p in states:
            assert sieve.predictability_loss(CNOT, rho_f, p) < 1e-10


def test_sieve_check_agrees_on_standard_channels():
    for u in (cnot(), np.eye(4), swap(2, 2)):
        ch = bp.UnitaryChannel.square(u, 2)
        reports = sieve.sieve_check(ch)
        assert reports and all(r.agrees for r in reports)
    identity = sieve.sieve_check(bp.UnitaryChannel.square(np.eye(4), 2))
    assert all(r.zero_loss for r in identity)
    swapped = sieve.sieve_check(bp.UnitaryChannel.square(swap(2, 2), 2))
    assert not any(r.zero_loss for r in swapped)


def test_sieve_check_cnot_states():
    reports = {r.state: r for r in sieve.sieve_check(CNOT)}
    assert reports["basis_0"].zero_loss and reports["basis_1"].zero_loss
    assert not reports["uniform"].zero_loss
    assert abs(reports["uniform"].max_loss - np.log(2)) < 1e-12
    assert reports["uniform"].below_epsilon is False


def test_sieve_check_on_corpus():
    for _, ch in two_qubit_corpus(51)[:25]:
        assert all(r.agrees for r in sieve.sieve_check(ch, n_random=4, seed=1))


def test_sieve_check_rejects_rectangular_channels():
    rng = rng_for(52)
    with pytest.raises(DimensionError):
        sieve.sieve_check(bp.UnitaryChannel(haar_unitary(6, rng), (2, 3), (3, 2)))


def test_sieve_check_strict_flags_disagreement(monkeypatch):
    monkeypatch.setattr(sieve, "LOSS_TOL", -1.0)
    with pytest.raises(ConsistencyError):
        sieve.sieve_check(CNOT)
    loose = sieve.sieve_check(CNOT, strict=False)
    assert not all(r.agrees for r in loose)
