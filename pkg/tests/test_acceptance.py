"""End-to-end acceptance checks, one test per numbered criterion.

The conftest prints a PASS or FAIL line for each of them after the run.
"""

import itertools

import numpy as np

from decolab import bipartite as bp
from decolab import circuit as cc
from decolab import hamiltonian as hm
from decolab import scenarios
from decolab import sieve
from decolab import vnalgebra as va
from decolab.broken import oracle_preferred_match
from decolab.circuit import SystemsOfInterest
from decolab.gates import HADAMARD, cnot, swap
from decolab.linops import PAULI, kron, projector
from decolab.sampling import (
    coherent_control_unitary,
    haar_unitary,
    random_circuit,
    random_density,
    random_systems,
    rng_for,
    two_qubit_corpus,
)

from helpers import (
    I2, KET0, KET1, MINUS, PLUS, X, Z,
    event_index, full, hamiltonian_corpus, history, oracle, planted_algebra, same, span, trivial,
)

CORPUS_SEED = 2024
SINGLE = ("F1", "F2", "G1", "G2", "S", "M", "N", "H1", "H2")


def criterion(number, title):
    def mark(fn):
        fn.criterion, fn.criterion_title = number, title
        return fn
    return mark


def _corpus():
    return two_qubit_corpus(CORPUS_SEED)


def _square(u):
    return bp.UnitaryChannel.square(u, 2)


@criterion(1, "balance table for identity, swap and cnot")
def test_balance_table():
    table = {
        "identity": (np.eye(4), trivial(), full(), trivial()),
        "swap": (swap(2, 2), full(), trivial(), trivial()),
        "cnot": (cnot(), span(Z), span(Z), span(Z)),
    }
    for name, (u, acc, pacc, dec) in table.items():
        an = bp.analyze(_square(u))
        assert same(an.acc, acc), name
        assert same(an.pacc, pacc), name
        assert same(an.dec, dec), name


@criterion(2, "cnot influence truth table")
def test_cnot_influence_table():
    ch = _square(cnot())
    want = {
        ("X", "X"): False, ("Y", "X"): False, ("Z", "X"): False,
        ("X", "Z"): True, ("Y", "Z"): True, ("Z", "Z"): False,
    }
    got = {(a, b): bp.influences_op(kron(PAULI[a], I2), kron(I2, PAULI[b]), ch) for a, b in want}
    assert got == want


@criterion(3, "non-influence, potential accessibility and locality agree")
def test_three_way_equivalence():
    rng = rng_for(CORPUS_SEED + 1)
    disagreements, positives = 0, 0
    for _, ch in _corpus():
        pacc = bp.pacc_algebra(ch)
        frames = [np.eye(2)] + [haar_unitary(2, rng) for _ in range(3)]
        for f, a in itertools.product(frames, "IXYZ"):
            m = f @ PAULI[a] @ f.conj().T
            in_pacc = pacc.contains(m)
            quiet = not bp.influences_system(m, ch)
            pushed = ch.push(kron(m, I2))
            local = np.trace(pushed.reshape(2, 2, 2, 2), axis1=1, axis2=3) / 2
            stays = np.linalg.norm(pushed - kron(local, I2)) < 1e-7
            disagreements += not (in_pacc == quiet == stays)
            positives += in_pacc and a != "I"
    assert disagreements == 0
    assert positives > 0


def _planted_control(ds, df, rng):
    psi, phi = haar_unitary(ds, rng), haar_unitary(ds, rng)
    conds = [haar_unitary(df, rng) for _ in range(ds)]
    return psi, phi, conds


def _assemble(psi, phi, conds):
    return sum(kron(np.outer(phi[:, k], psi[:, k].conj()), conds[k]) for k in range(len(conds)))


@criterion(4, "control form recovered for planted bases and absent for proportional conditionals")
def test_control_form_detection():
    rng = rng_for(CORPUS_SEED + 2)
    for i in range(50):
        ds = 2 if i % 2 == 0 else 3
        psi, phi, conds = _planted_control(ds, 2, rng)
        cf = bp.detect_control_form(bp.UnitaryChannel.square(_assemble(psi, phi, conds), ds))
        assert cf is not None
        fid = np.abs(psi.conj().T @ cf.control_basis) ** 2
        match = fid.argmax(axis=0)
        assert sorted(match) == list(range(ds))
        assert np.all(fid.max(axis=0) >= 1 - 1e-9)
    for i in range(20):
        ds = 2 if i % 2 == 0 else 3
        psi, phi, conds = _planted_control(ds, 2, rng)
        conds[1] = np.exp(1j * rng.uniform(0, 2 * np.pi)) * conds[0]
        assert bp.detect_control_form(bp.UnitaryChannel.square(_assemble(psi, phi, conds), ds)) is None


@criterion(5, "decohered algebra pushes forward to the decohered algebra of the inverse")
def test_dec_push_forward():
    for name, ch in _corpus():
        assert same(bp.push_algebra(ch, bp.analyze(ch).dec), bp.dual_analyze(ch).dec), name


def _single_expectations():
    x = span(np.outer(PLUS, PLUS))
    want = {label: (trivial(), trivial()) for label in SINGLE}
    want.update({"S": (span(Z), x), "M": (trivial(), span(Z)), "N": (span(Z), trivial())})
    return want


def _check_single_measurement(hs):
    for label, (up, down) in _single_expectations().items():
        assert same(hs.analyses[label].up_dec, up), (label, "up")
        assert same(hs.analyses[label].down_dec, down), (label, "down")


@criterion(6, "single measurement: algebras, history table and conditionals")
def test_single_measurement():
    _, _, hs = history("single_measurement")
    _check_single_measurement(hs)
    nontrivial = sum(not a.up_dec.is_trivial() for a in hs.analyses.values())
    nontrivial += sum(not a.down_dec.is_trivial() for a in hs.analyses.values())
    assert nontrivial == 4
    hd = hs.distribution
    assert hd.table.size == 16
    for fs, es, fm, en in itertools.product((0, 1), repeat=4):
        psi = PLUS if fs == 0 else MINUS
        e = KET0 if es == 0 else KET1
        want = 0.25 * abs(np.vdot(e, psi)) ** 2 * (en == es ^ fm)
        assert abs(cc.probability(hd, {"f_S": fs, "e_S": es, "f_M": fm, "e_N": en}) - want) < 1e-10
    for fs in (0, 1):
        born = cc.conditional(hd, ["e_S"], {"f_S": fs})
        psi = PLUS if fs == 0 else MINUS
        for es, e in enumerate((KET0, KET1)):
            assert abs(born[(es,)] - abs(np.vdot(e, psi)) ** 2) < 1e-12
    for es, fm in itertools.product((0, 1), repeat=2):
        rec = cc.conditional(hd, ["e_N"], {"e_S": es, "f_M": fm})
        for en in (0, 1):
            assert abs(rec[(en,)] - float(en == es ^ fm)) < 1e-12


def _projection_postulate(c, soi, hd, w):
    psi0 = HADAMARD[:, 0]
    t = soi.ref("T")
    for en in (0, 1):
        phi = np.array([psi0[0] * (en == 0), psi0[1] * (en == 1)])
        phi = phi / np.linalg.norm(phi)
        dist = cc.conditional(hd, ["e_T"], {"f_S": 0, "f_M": 0, "e_N": en})
        for k in (0, 1):
            idx = event_index(hd, "e_T", w.conj().T @ np.diag([1 - k, k]) @ w, c, t)
            assert abs(dist[(idx,)] - abs((w @ phi)[k]) ** 2) < 1e-9


@criterion(7, "two measurements: projection postulate for the second readout")
def test_two_measurements():
    c, soi, hs = history("two_measurements")
    _projection_postulate(c, soi, hs.distribution, HADAMARD)
    w = haar_unitary(2, rng_for(CORPUS_SEED + 3))
    o = w.conj().T @ Z @ w
    assert np.linalg.norm(o @ Z - Z @ o) > 0.1
    c, soi = scenarios.two_measurements(w=w)
    _projection_postulate(c, soi, cc.derive_history_set(c, soi).distribution, w)


@criterion(8, "wigner circuit: erased records and the truncated run")
def test_wigner():
    _, _, hs = history("wigner")
    assert hs.analyses["S"].up_dec.is_trivial()
    assert hs.analyses["N"].up_dec.is_trivial()
    _, _, truncated = history("wigner", SINGLE)
    _check_single_measurement(truncated)
    _, _, single = history("single_measurement")
    a, b = truncated.distribution, single.distribution
    assert a.nontrivial() == b.nontrivial()
    assert np.max(np.abs(np.squeeze(a.table) - np.squeeze(b.table))) < 1e-10


@criterion(9, "degenerate choices of systems of interest")
def test_degenerate_systems():
    c, _ = scenarios.single_measurement()
    hd = cc.derive_history_set(c, SystemsOfInterest.all_segments(c)).distribution
    assert hd.nontrivial() == [] and abs(hd.table.sum() - 1) < 1e-12
    _, _, one = history("single_measurement", ("S",))
    assert one.distribution.nontrivial() == []
    _, _, b1 = history("two_measurements", ("S", "N"))
    _, _, b2 = history("two_measurements", ("S", "P"))
    z_s, o_s = b1.analyses["S"].up_dec, b2.analyses["S"].up_dec
    assert same(z_s, span(Z))
    assert same(o_s, span(X))
    assert not va.commutant(o_s).contains(Z)


def _rebased(c, soi):
    """The systems of ``soi`` on ``c``, keeping the first label of each segment."""
    seen, keep = set(), []
    for r in soi.refs:
        seg = c.segment(r.wire, r.slot)
        if seg not in seen:
            seen.add(seg)
            keep.append((r.label(), c.labels[r.wire], r.slot))
    return SystemsOfInterest.from_labels(c, keep)


@criterion(10, "ablations of the record gates")
def test_ablations():
    c, soi = scenarios.single_measurement()
    for dropped, e_s, e_n in (("C", 2, 1), ("B", 2, 2)):
        smaller = c.without_gates([dropped])
        hd = cc.derive_history_set(smaller, _rebased(smaller, soi)).distribution
        assert hd.arities[hd.index("e_S")] == e_s, dropped
        assert hd.arities[hd.index("e_N")] == e_n, dropped


@criterion(11, "every derived history set is consistent; an interfering family is flagged")
def test_consistency():
    sets = [history(name)[2].distribution for name in scenarios.SCENARIOS]
    for seed in range(20):
        c = random_circuit(seed)
        sets.append(cc.derive_history_set(c, random_systems(c, seed)).distribution)
    for hd in sets:
        rep = cc.check_consistency(hd)
        assert rep.passed, rep.violations()
        assert abs(hd.table.sum() - 1) < 1e-9
        assert rep.additivity_error < 1e-9 and rep.strong_error < 1e-9
    px = np.array([projector(PLUS), projector(MINUS)])
    pz = np.array([projector(KET0), projector(KET1)])
    assert not cc.functional_consistency([px, pz], projector(KET0)).passed


@criterion(12, "predictability sieve matches potential accessibility")
def test_sieve():
    rng = rng_for(CORPUS_SEED + 4)
    positives = 0
    for i, (_, ch) in enumerate(_corpus()):
        fixed = sieve.state_samples(ch, 0, i, bp.pacc_algebra(ch))
        states = fixed + [(f"haar_{j}", haar_unitary(2, rng)[:, 0]) for j in range(20 - len(fixed))]
        assert len(states) == 20
        reports = sieve.sieve_check(ch, states, strict=False)
        assert all(r.agrees for r in reports)
        positives += sum(r.zero_loss for r in reports)
    assert positives > 0
    ch, ket0 = _square(cnot()), projector(KET0)
    losses = [sieve.predictability_loss(ch, ket0, projector(v)) for v in (KET0, KET1, PLUS)]
    assert np.allclose(losses, [0, 0, np.log(2)], atol=1e-9)


@criterion(13, "hamiltonian identities and the zz control form")
def test_hamiltonian():
    for m in hamiltonian_corpus(CORPUS_SEED + 5, 50):
        dec, _ = hm.dec_h(m)
        assert same(dec, va.intersect(hm.acc_h(m), hm.robust_algebra(m)))
        assert same(hm.pacc_h(m), hm.rotating_frame_robust(m))
    cf = hm.detect_control_form_h(hm.HamiltonianModel(kron(Z, Z), 2, 2))
    assert cf is not None
    np.testing.assert_allclose(cf.control_basis, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(cf.conditionals, [Z, -Z], atol=1e-12)


@criterion(14, "broken-wire oracle agrees with the circuit pipeline")
def test_oracle():
    for name in scenarios.SCENARIOS:
        rep = oracle(name)
        assert rep.passed, [(e.system, e.direction) for e in rep.failures()]
    nontrivial = 0
    for seed in range(20):
        c = random_circuit(seed, 4)
        rep = oracle_preferred_match(c, random_systems(c, seed), seed)
        assert rep.passed, seed
        nontrivial += sum(e.circuit_dim > 1 for e in rep.entries)
    assert nontrivial > 0


@criterion(15, "algebraic property corpora")
def test_property_corpora():
    for seed in range(30):
        a, _ = planted_algebra(seed)
        assert va.equals(va.commutant(va.commutant(a)), a)
        assert va.equals(va.from_spanning_set(a.hermitian_basis), a)
    for seed in range(10):
        c = random_circuit(100 + seed)
        hd = cc.derive_history_set(c, random_systems(c, seed)).distribution
        assert cc._max_commutator(hd.up_families()) < 1e-7
        assert cc._max_commutator(hd.down_families()) < 1e-7
    rng = rng_for(CORPUS_SEED + 6)
    for _ in range(30):
        ch = _square(coherent_control_unitary(2, 2, rng))
        basis = bp.detect_control_form(ch).control_basis
        rho_s, rho_f = random_density(2, rng), random_density(2, rng)
        a = bp.environment_marginal(ch, rho_s, rho_f)
        b = bp.environment_marginal(ch, bp.dephase(rho_s, basis), rho_f)
        assert np.linalg.norm(a - b) < 1e-9
