import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from myopic_avc import _bits
from myopic_avc.adversary import (AdversaryStrategy, blind_fixed_type, blind_iid, clamp_states,
                                  decode_and_push, greedy_myopic, memoryless_attack,
                                  oracle_assisted, realize_counts)
from myopic_avc.coding import (AMBIGUOUS, Codebook, build_oracle_partition, decode_ball,
                               generate_codebook)
from myopic_avc.core import (ProbVector, bec, bsc, channel_output, make_c_qp, make_ce_qp,
                             make_cef, polytope_contains)


def in_w(spec, s, n=None):
    n = len(s) if n is None else n
    t = np.bincount(np.asarray(s), minlength=len(spec.s_alpha)) / n
    return polytope_contains(spec.w_constraint, t, tol=1e-12)


def test_blind_fixed_type_count():
    spec = make_c_qp(0.3, 0.1)
    r = blind_fixed_type(spec, 10, [0.9, 0.1], seed=3)
    assert r.states.sum() == 1 and not r.rounded


def test_blind_fixed_type_zero_budget():
    r = blind_fixed_type(make_c_qp(0.3, 0.0), 16, seed=1)
    assert not r.states.any()


def test_blind_fixed_type_position_uniform():
    spec = make_c_qp(0.3, 0.1)
    rng = np.random.default_rng(0)
    N = 100_000
    hist = np.zeros(10)
    for _ in range(N):
        hist += blind_fixed_type(spec, 10, [0.9, 0.1], rng).states
    assert hist.sum() == N
    assert chisquare(hist).pvalue > 1e-3


def test_blind_fixed_type_rounding_reported():
    r = blind_fixed_type(make_c_qp(0.3, 0.1), 15, [0.9, 0.1], seed=0)
    assert r.rounded and r.states.sum() == 1


def test_blind_fixed_type_rejects_outside_w():
    with pytest.raises(ValueError):
        blind_fixed_type(make_c_qp(0.3, 0.1), 10, [0.8, 0.2])


def test_blind_iid_clamped_into_w():
    spec = make_c_qp(0.3, 0.1)
    r = blind_iid(spec, 50, [0.5, 0.5], seed=0)
    assert r.clamped and r.states.sum() == 5
    r = blind_iid(spec, 2000, [0.95, 0.05], seed=1)
    assert abs(r.states.mean() - 0.05) <= 3 * np.sqrt(0.05 * 0.95 / 2000)


def test_memoryless_point_mass():
    spec = make_c_qp(0.3, 0.1)
    r = memoryless_attack(spec, "0101101100", [[1, 0], [1, 0]], seed=0)
    assert not r.states.any() and not r.clamped


def test_memoryless_flip_fraction_concentrates():
    spec = make_c_qp(0.3, 0.1)
    n = 4000
    z = np.random.default_rng(1).integers(0, 2, n)
    r = memoryless_attack(spec, z, [[0.9, 0.1], [0.9, 0.1]], seed=2)
    frac = r.states.mean()
    assert frac <= 0.1 + 1e-12
    assert abs(frac - 0.1) <= 2 * np.sqrt(0.09 / n) + 1e-12


def test_memoryless_rejects_infeasible_kernel():
    with pytest.raises(ValueError):
        memoryless_attack(make_c_qp(0.3, 0.1), "0101", [[0.8, 0.2], [0.8, 0.2]])


def test_clamp_never_exceeds_budget():
    spec = make_c_qp(0.3, 0.1)
    s, clamped = clamp_states(spec, np.ones(50, dtype=np.uint8), 0)
    assert clamped and s.sum() == 5


def test_realize_counts():
    counts, rounded = realize_counts(make_cef(bec(0.5), 0.1, 0.05), 20, [0.85, 0.05, 0.1])
    assert counts.tolist() == [17, 1, 2] and not rounded


def test_greedy_single_codeword_falls_back():
    spec = make_c_qp(0.3, 0.1)
    cb = generate_codebook(spec, 20, 0.0, 0)
    r = greedy_myopic(spec, cb, "0" * 20, seed=0)
    assert r.fallback and r.states.sum() == 2


def two_word_codebook(n, d):
    """A stored codebook whose two codewords sit at distance ``d``."""
    spec = make_c_qp(0.0, d / (2 * n))
    cb = Codebook(spec.x_alpha, n, 1 / n, 0, ProbVector.uniform(spec.x_alpha), "dense")
    a = np.zeros(n, dtype=np.uint8)
    b = a.copy()
    b[:d] = 1
    object.__setattr__(cb, "_packed", _bits.pack(np.stack([a, b])))
    return spec, cb


def test_greedy_with_perfect_view_lands_midway():
    n, d = 20, 8
    spec, cb = two_word_codebook(n, d)
    p = d / (2 * n)
    errors = 0
    for w in (0, 1):
        x = cb.codeword(w)
        r = greedy_myopic(spec, cb, x, seed=w)
        y = channel_output(spec, x, r.states)
        assert _bits.popcount(_bits.pack(y) ^ cb.packed([1 - w]))[0] == d // 2
        out = decode_ball(cb, y, p + 0.02)
        errors += out.status == AMBIGUOUS
    assert errors / 2 >= 0.5


def test_greedy_blind_view_is_near_blind():
    spec = make_c_qp(0.5, 0.1)
    cb = generate_codebook(spec, 30, 0.3, 2)
    rng = np.random.default_rng(0)
    fails = {"greedy": 0, "blind": 0}
    for t in range(300):
        w = int(rng.integers(len(cb)))
        x = cb.codeword(w)
        z = rng.integers(0, 2, 30)
        for kind, s in (("greedy", greedy_myopic(spec, cb, z, seed=t).states),
                        ("blind", blind_fixed_type(spec, 30, seed=t).states)):
            out = decode_ball(cb, channel_output(spec, x, s), 0.12)
            fails[kind] += out.message != w
    sd = np.sqrt(300 * 0.25)
    assert fails["greedy"] <= fails["blind"] + 3 * sd + 5


def test_decode_and_push_perfect_view():
    spec = make_c_qp(0.0, 0.2)
    cb = generate_codebook(spec, 20, 0.3, 1)
    x = cb.codeword(4)
    r = decode_and_push(spec, cb, x, seed=0)
    assert not r.fallback and r.states.sum() == 4


def test_decode_and_push_blind_view_falls_back():
    spec = make_c_qp(0.5, 0.2)
    cb = generate_codebook(spec, 40, 0.3, 1)
    rng = np.random.default_rng(5)
    fb = sum(decode_and_push(spec, cb, rng.integers(0, 2, 40), seed=t).fallback
             for t in range(300))
    assert fb / 300 > 0.99


def test_decode_and_push_erasure_view():
    spec = make_ce_qp(0.0, 0.2)
    cb = generate_codebook(spec, 20, 0.4, 1)
    x = cb.codeword(2)
    r = decode_and_push(spec, cb, "".join(map(str, x)), seed=0)
    assert not r.fallback and in_w(spec, r.states)


def test_oracle_single_member_is_omniscient_push():
    spec = make_c_qp(0.3, 0.1)
    cb = generate_codebook(spec, 16, 0.5, 0)
    z = cb.codeword(0)
    part = build_oracle_partition(cb, z, 0, delta=0.0)
    r = oracle_assisted(spec, cb, part, 0, seed=1)
    assert in_w(spec, r.states) and r.states.sum() == 1


def test_oracle_midpoint_on_pair():
    spec = make_c_qp(0.3, 0.25)
    cb = generate_codebook(spec, 16, 0.5, 3)
    z = cb.codeword(0)
    part = build_oracle_partition(cb, z, 5, delta=0.25)
    r = oracle_assisted(spec, cb, part, 0, seed=1)
    assert in_w(spec, r.states) and r.states.sum() > 0


def test_oracle_whole_shell_no_better_than_greedy():
    spec = make_c_qp(0.3, 0.1)
    n = 30
    cb = generate_codebook(spec, n, 0.3, 4)
    rng = np.random.default_rng(7)
    wins = {"oracle": 0, "greedy": 0}
    trials = 300
    for t in range(trials):
        w = int(rng.integers(len(cb)))
        x = cb.codeword(w)
        z = np.where(rng.random(n) < 0.3, 1 - x, x)
        d = int(np.count_nonzero(x != z))
        part = build_oracle_partition(cb, z, d, delta=1.0)
        so = oracle_assisted(spec, cb, part, part.subset_of(w), seed=t).states
        sg = greedy_myopic(spec, cb, z, seed=t).states
        for kind, s in (("oracle", so), ("greedy", sg)):
            wins[kind] += decode_ball(cb, channel_output(spec, x, s), 0.12).message != w
    sd = np.sqrt(trials * 0.25)
    assert wins["oracle"] <= wins["greedy"] + 2 * sd


def test_descriptor_roundtrip_and_validation():
    a = AdversaryStrategy("greedy-myopic", {"eps1": 0.03}, 9)
    assert AdversaryStrategy.from_json(a.to_json()) == a
    with pytest.raises(ValueError):
        AdversaryStrategy("psychic")


def test_descriptor_default_memoryless_kernel():
    spec = make_c_qp(0.3, 0.1)
    cb = generate_codebook(spec, 40, 0.2, 0)
    r = AdversaryStrategy("memoryless-kernel").attack(spec, cb, "0" * 40,
                                                     np.random.default_rng(0))
    assert in_w(spec, r.states)


SPECS = [make_c_qp(0.3, 0.1), make_c_qp(0.05, 0.2), make_ce_qp(0.5, 0.2),
         make_cef(bec(0.5), 0.1, 0.05), make_cef(bsc(0.2), 0.05, 0.1)]


@settings(max_examples=60, deadline=None)
@given(i=st.integers(0, len(SPECS) - 1), kind=st.sampled_from(
    ["blind-iid", "blind-fixed-type", "memoryless-kernel", "greedy-myopic", "decode-and-push"]),
    seed=st.integers(0, 2**32), n=st.integers(8, 24))
def test_every_strategy_respects_w(i, kind, seed, n):
    spec = SPECS[i]
    cb = generate_codebook(spec, n, 0.3, seed % 97)
    rng = np.random.default_rng(seed)
    z = spec.z_alpha.decode(np.random.default_rng(seed + 1).choice(
        len(spec.z_alpha), size=n, p=spec.p_z_given_x.matrix[0]))
    r = AdversaryStrategy(kind).attack(spec, cb, z, rng)
    assert r.states.shape == (n,)
    assert in_w(spec, r.states)


@settings(max_examples=30, deadline=None)
@given(kind=st.sampled_from(["blind-iid", "blind-fixed-type", "greedy-myopic",
                             "decode-and-push", "memoryless-kernel"]),
       seed=st.integers(0, 2**32))
def test_strategies_deterministic_given_seed(kind, seed):
    spec = make_c_qp(0.3, 0.1)
    cb = generate_codebook(spec, 20, 0.3, 1)
    z = "01101001011010010110"
    a = AdversaryStrategy(kind).attack(spec, cb, z, np.random.default_rng(seed))
    b = AdversaryStrategy(kind).attack(spec, cb, z, np.random.default_rng(seed))
    np.testing.assert_array_equal(a.states, b.states)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_blind_strategies_ignore_z(seed):
    spec = make_c_qp(0.3, 0.1)
    cb = generate_codebook(spec, 20, 0.3, 1)
    for kind in ("blind-iid", "blind-fixed-type"):
        a = AdversaryStrategy(kind).attack(spec, cb, "0" * 20, np.random.default_rng(seed))
        b = AdversaryStrategy(kind).attack(spec, cb, "1" * 20, np.random.default_rng(seed))
        np.testing.assert_array_equal(a.states, b.states)
