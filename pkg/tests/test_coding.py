import numpy as np
import pytest

from avmac.channel import InputEnsemble
from avmac.coding import (CapacityError, Codebook, FixedSequence, IIDState, MaxLikelihoodWorstQ,
                          PermutationCode, SymCond1, SymJoint, TypeDecoder, attack_state_law,
                          build_codebook, conditional_error_exact, decode,
                          exact_error_under_attack, permute, run_jammer, simulate,
                          strategy_from_witness, wilson_interval)
from avmac.examples import adder_channel, ahlswede_cai_channel, bsmac_channel
from avmac.symmetrizability import SymmetryKind, check_symmetrizable

HALF = InputEnsemble.product([0.5, 0.5], [0.5, 0.5])


def adder3_attack():
    b = adder_channel(3)
    J = np.zeros((2, 2, 3))
    for a in range(2):
        for c in range(2):
            J[a, c, a + c] = 1.0
    return b, SymJoint(J)


# -- codebooks -----------------------------------------------------------------

def test_single_message_codebook_is_trivial():
    b = bsmac_channel()
    code = build_codebook(b.spec, b.costs, b.constraints, 8, 1, 1, HALF)
    assert code.X1.shape == (1, 8) and code.X2.shape == (1, 8)


def test_constant_composition():
    b = bsmac_channel()
    code = build_codebook(b.spec, b.costs, b.constraints, 8, 4, 4, HALF, seed=3)
    assert np.all(code.X1.sum(axis=1) == 4) and np.all(code.X2.sum(axis=1) == 4)
    assert np.all(code.cost1 == 0.5)


def test_codewords_distinct_over_seeds():
    b = adder_channel(3)
    for seed in range(100):
        code = build_codebook(b.spec, b.costs, b.constraints, 8, 4, 4, HALF, seed=seed)
        assert len({r.tobytes() for r in code.X1}) == 4
        assert len({r.tobytes() for r in code.X2}) == 4


def test_codebook_respects_input_constraint():
    b = bsmac_channel(0.1, 0.3, 0.1)
    ens = InputEnsemble.product([0.5, 0.5], [0.5, 0.5])  # over budget; rounding pulls it back
    code = build_codebook(b.spec, b.costs, b.constraints, 10, 2, 2, ens)
    assert np.all(code.cost1 <= 0.1 + 1e-12) and np.all(code.cost2 <= 0.3 + 1e-12)


def test_codebook_errors():
    b = bsmac_channel()
    with pytest.raises(ValueError):
        build_codebook(b.spec, b.costs, b.constraints, 0, 1, 1, HALF)
    with pytest.raises(ValueError):  # only 2 words of length 2 and weight 1
        build_codebook(b.spec, b.costs, b.constraints, 2, 3, 1, HALF, redraw_cap=50)


def test_max_pair_info_gives_product_pair_types():
    b = bsmac_channel()
    code = build_codebook(b.spec, b.costs, b.constraints, 8, 2, 2, HALF, max_pair_info=1e-9)
    for x1 in code.X1:
        for x2 in code.X2:
            counts = np.bincount(2 * x1 + x2, minlength=4)
            assert np.all(counts == 2)


# -- jammers ------------------------------------------------------------------------

def test_fixed_sequence_jammer():
    b = adder_channel(3)
    code = build_codebook(b.spec, b.costs, b.constraints, 6, 2, 2, HALF)
    s, fb = run_jammer(FixedSequence(np.zeros(6, dtype=int)), code, b.costs, b.constraints, 0)
    assert not fb and b.costs.l[s].mean() == 0.0
    with pytest.raises(ValueError):
        run_jammer(FixedSequence(np.zeros(5, dtype=int)), code, b.costs, b.constraints, 0)


def test_sym_joint_jammer_adds_a_codeword_pair():
    b, attack = adder3_attack()
    code = build_codebook(b.spec, b.costs, b.constraints, 6, 2, 2, HALF)
    sums = {(code.X1[i] + code.X2[j]).tobytes() for i in range(2) for j in range(2)}
    for seed in range(20):
        s, fb = run_jammer(attack, code, b.costs, b.constraints, seed)
        assert not fb and s.tobytes() in sums
        assert b.costs.l[s].mean() <= b.constraints.lam


def test_fallback_must_be_free():
    b, attack = adder3_attack()
    code = build_codebook(b.spec, b.costs, b.constraints, 6, 2, 2, HALF)
    with pytest.raises(ValueError):
        run_jammer(SymJoint(attack.J, fallback=2), code, b.costs, b.constraints, 0)


def test_sym_cond1_fallback_rare():
    b = bsmac_channel(0.1, 1.0, 0.1)
    w = check_symmetrizable(b.spec, SymmetryKind.COND1)
    assert w is not None
    strat = strategy_from_witness(w, b.spec)
    assert isinstance(strat, SymCond1)
    ens = InputEnsemble.product([0.9, 0.1], [0.5, 0.5])
    code = build_codebook(b.spec, b.costs, b.constraints, 64, 8, 2, ens)
    rng = np.random.default_rng(0)
    fallbacks = sum(run_jammer(strat, code, b.costs, b.constraints, rng)[1] for _ in range(10_000))
    assert fallbacks / 10_000 < 0.1


def test_attack_law_sums_to_one():
    b, attack = adder3_attack()
    code = build_codebook(b.spec, b.costs, b.constraints, 6, 2, 2, HALF, seed=4)
    law, fb = attack_state_law(attack, code, b.costs, b.constraints)
    assert sum(law.values()) == pytest.approx(1.0) and fb == 0.0


# -- decoders -------------------------------------------------------------------------

def noiseless_bsmac():
    b = bsmac_channel()
    code = build_codebook(b.spec, b.costs, b.constraints, 8, 3, 3, HALF, seed=1, max_pair_info=1e-9)
    return b, code


@pytest.mark.parametrize("dec", [TypeDecoder(), MaxLikelihoodWorstQ(np.array([1.0, 0, 0, 0]))])
def test_noiseless_decoding_is_exact(dec):
    b, code = noiseless_bsmac()
    s = np.zeros(8, dtype=int)
    for m1 in range(3):
        for m2 in range(3):
            y = b.spec.W[code.X1[m1], code.X2[m2], s].argmax(axis=1)
            assert decode(dec, code, y, b.spec, b.costs, b.constraints) == (m1, m2)
    assert conditional_error_exact(b.spec, code, dec, s, b.costs, b.constraints) == 0.0


def test_identical_codewords_are_ambiguous():
    b = bsmac_channel()
    X = np.array([[0, 1, 0, 1, 0, 1, 0, 1]] * 2)
    code = Codebook(8, np.zeros(8, dtype=int), X, X[:1], np.full(2, 0.5), np.full(1, 0.5))
    y = b.spec.W[X[0], X[0], np.zeros(8, dtype=int)].argmax(axis=1)
    assert decode(TypeDecoder(), code, y, b.spec, b.costs, b.constraints) is None


def test_type_decoder_rejects_bad_thresholds():
    with pytest.raises(ValueError):
        TypeDecoder(eta=0.0)


def test_type_decoder_on_benign_low_noise_bsmac():
    b, code = noiseless_bsmac()
    rep = simulate(b.spec, code, TypeDecoder(), IIDState(np.array([0.995, 0.0025, 0.0025, 0])),
                   b.costs, b.constraints, trials=300, seed=0)
    assert rep.estimate < 0.3


def test_state_enumeration_cap():
    b = bsmac_channel(1, 1, 2.0)
    code = build_codebook(b.spec, b.costs, b.constraints, 8, 2, 2, HALF, max_pair_info=1e-9)
    y = np.zeros(8, dtype=int)
    with pytest.raises(CapacityError):
        decode(TypeDecoder(cap_log2=4), code, y, b.spec, b.costs, b.constraints)


def test_output_enumeration_cap():
    b = ahlswede_cai_channel()
    code = build_codebook(b.spec, b.costs, b.constraints, 6, 2, 2, HALF)
    s = np.ones(6, dtype=int)  # half of the positions see a fair coin for y
    dec = MaxLikelihoodWorstQ(np.array([0.5, 0.5]))
    with pytest.raises(CapacityError):
        conditional_error_exact(b.spec, code, dec, s, b.costs, b.constraints, cap_log2=2)
    assert 0.0 <= conditional_error_exact(b.spec, code, dec, s, b.costs, b.constraints) <= 1.0


# -- simulation -------------------------------------------------------------------------

def test_zero_noise_simulation_has_no_errors():
    b, code = noiseless_bsmac()
    rep = simulate(b.spec, code, TypeDecoder(), IIDState(np.array([1.0, 0, 0, 0])),
                   b.costs, b.constraints, trials=200)
    assert rep.errors == 0 and rep.interval[0] == 0.0
    assert rep.input_audit_ok and rep.state_audit_ok


def test_symmetrizing_attack_floor_and_audits():
    b, attack = adder3_attack()
    code = build_codebook(b.spec, b.costs, b.constraints, 6, 2, 2, HALF, seed=2)
    err, fb = exact_error_under_attack(b.spec, code, TypeDecoder(), attack, b.costs, b.constraints)
    assert err >= 0.24 and fb == 0.0
    rep = simulate(b.spec, code, TypeDecoder(), attack, b.costs, b.constraints, trials=500)
    assert rep.estimate >= 0.20
    assert rep.state_audit_ok and rep.max_state_cost <= b.constraints.lam


def test_simulation_is_deterministic():
    b, attack = adder3_attack()
    code = build_codebook(b.spec, b.costs, b.constraints, 6, 2, 2, HALF, seed=2)
    dec = MaxLikelihoodWorstQ(np.array([1 / 3] * 3))
    r1 = simulate(b.spec, code, dec, attack, b.costs, b.constraints, trials=300, seed=9)
    r2 = simulate(b.spec, code, dec, attack, b.costs, b.constraints, trials=300, seed=9)
    assert r1.to_dict() == r2.to_dict()


def test_permutation_helps_against_codebook_aware_jammer():
    b = ahlswede_cai_channel()
    w = check_symmetrizable(b.spec, SymmetryKind.JOINT)
    attack = strategy_from_witness(w, b.spec)
    dec = MaxLikelihoodWorstQ(np.array([0.5, 0.5]))
    det = perm = 0
    for seed in range(5):
        code = build_codebook(b.spec, b.costs, b.constraints, 8, 2, 2, HALF, seed=seed)
        det += simulate(b.spec, code, dec, attack, b.costs, b.constraints, 400, seed).errors
        pc = PermutationCode(code, np.arange(8))
        perm += simulate(b.spec, pc, dec, attack, b.costs, b.constraints, 400, seed).errors
    assert perm <= det


def test_permutation_identity_small():
    b = ahlswede_cai_channel()
    code = build_codebook(b.spec, b.costs, b.constraints, 5, 2, 2, HALF, seed=0)
    rng = np.random.default_rng(1)
    for dec in (TypeDecoder(), MaxLikelihoodWorstQ(np.array([0.5, 0.5]))):
        for _ in range(5):
            pi = rng.permutation(5)
            s = rng.integers(0, 2, 5)
            pc = PermutationCode(code, pi)
            e_perm = conditional_error_exact(b.spec, pc, dec, permute(s, pc.inverse),
                                             b.costs, b.constraints)
            e_base = conditional_error_exact(b.spec, code, dec, s, b.costs, b.constraints)
            assert abs(e_perm - e_base) <= 1e-12


def test_permutation_code_validation():
    b, code = noiseless_bsmac()
    with pytest.raises(ValueError):
        PermutationCode(code, np.array([0, 0, 1, 2, 3, 4, 5, 6]))
    pc = PermutationCode(code, np.arange(8)[::-1])
    assert np.array_equal(pc.base_equivalent_state(np.arange(8)), np.arange(8)[::-1])


def test_wilson_interval_contains_estimate():
    lo, hi = wilson_interval(30, 100)
    assert lo < 0.3 < hi and 0 <= lo and hi <= 1
    assert wilson_interval(0, 0) == (0.0, 1.0)
