import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from myopic_avc.core import BINARY, Polytope, ProbVector, bec, bsc, make_c_qp, make_ce_qp, make_cef
from myopic_avc.infotheory import (binary_entropy, conditional_entropy, entropy, induce_joint,
                                   mutual_information, state_marginal, strategy_feasible)

from oracles import h2


def test_binary_entropy_examples():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert abs(binary_entropy(0.1) - 0.4689955935892812) < 1e-15


def test_binary_entropy_out_of_range():
    with pytest.raises(ValueError):
        binary_entropy(1.5)


def test_entropy_uniform_four():
    assert abs(entropy(np.full(4, 0.25)) - 2.0) < 1e-15


def test_mutual_information_of_product_is_zero():
    p, q = np.array([0.3, 0.7]), np.array([0.2, 0.5, 0.3])
    assert abs(mutual_information(np.outer(p, q))) < 1e-15


def test_bsc_mutual_information():
    joint = 0.5 * np.array([[0.89, 0.11], [0.11, 0.89]])
    assert abs(mutual_information(joint) - (1 - h2(0.11))) < 1e-12
    assert abs(mutual_information(joint) - 0.500084041835472) < 1e-12


def test_conditional_entropy_directions():
    joint = np.array([[0.4, 0.1], [0.2, 0.3]])
    hx_y = conditional_entropy(joint, "x|y")
    hy_x = conditional_entropy(joint, "y|x")
    hxy = entropy(joint.ravel())
    assert abs(hx_y - (hxy - entropy(joint.sum(0)))) < 1e-12
    assert abs(hy_x - (hxy - entropy(joint.sum(1)))) < 1e-12


def test_induce_joint_no_attack():
    spec = make_c_qp(0.3, 0.1)
    J = induce_joint(spec, [0.5, 0.5], [[1, 0], [1, 0]])
    np.testing.assert_allclose(J.marginal("y"), J.marginal("x"))
    assert abs(J.I("x", "y") - 1.0) < 1e-12


@pytest.mark.parametrize("p", [0.05, 0.1, 0.25])
def test_induce_joint_symmetric_flip_is_bsc(p):
    J = induce_joint(make_c_qp(0.3, p), [0.5, 0.5], [[1 - p, p], [1 - p, p]])
    assert abs(J.I("x", "y") - (1 - h2(p))) < 1e-12


def test_induce_joint_symmetric_erasure_is_bec():
    J = induce_joint(make_ce_qp(0.5, 0.2), [0.5, 0.5], [[0.8, 0.2]] * 3)
    assert abs(J.I("x", "y") - 0.8) < 1e-12


def test_induce_joint_rejects_v_violation():
    spec = make_c_qp(0.3, 0.1)
    object.__setattr__(spec, "v_constraint", Polytope([[0.0, 1.0]], [0.3]))
    with pytest.raises(ValueError):
        induce_joint(spec, [0.5, 0.5], [[1, 0], [1, 0]])


def test_strategy_feasible_examples():
    spec = make_c_qp(0.3, 0.1)
    assert strategy_feasible(spec, [0.5, 0.5], [[0.9, 0.1], [0.9, 0.1]], tol=0.0)
    # uniform p_Z, so the marginal is (0.2 + 0.0) / 2 = 0.1
    np.testing.assert_allclose(state_marginal(spec, [0.5, 0.5], [[0.8, 0.2], [1.0, 0.0]]),
                               [0.9, 0.1])
    assert strategy_feasible(spec, [0.5, 0.5], [[0.8, 0.2], [1.0, 0.0]], tol=1e-12)
    assert not strategy_feasible(spec, [0.5, 0.5], [[0.8, 0.2], [0.8, 0.2]])


def _kernel(draw, rows, cols):
    raw = np.array([[draw(st.floats(0.01, 1.0)) for _ in range(cols)] for _ in range(rows)])
    return raw / raw.sum(axis=1, keepdims=True)


@st.composite
def cef_instance(draw):
    q = draw(st.floats(0.0, 1.0))
    p_e = draw(st.floats(0.0, 0.5))
    p_w = draw(st.floats(0.0, 0.5))
    view = bec(q) if draw(st.booleans()) else bsc(min(q, 0.5))
    px1 = draw(st.floats(0.0, 1.0))
    K = _kernel(draw, len(view.out), 3)
    return make_cef(view, p_e, p_w), np.array([1 - px1, px1]), K


@settings(max_examples=60, deadline=None)
@given(cef_instance())
def test_information_identities(inst):
    spec, px, K = inst
    J = induce_joint(spec, px, K)
    hx, hy = J.H("x"), J.H("y")
    ixy = J.I("x", "y")
    assert -1e-12 <= ixy <= min(hx, hy) + 1e-10
    assert abs(J.H("xy") - (hx + J.H("y", "x"))) < 1e-10
    np.testing.assert_allclose(J.marginal("x"), px, atol=1e-12)
    np.testing.assert_allclose(J.marginal("z"), px @ spec.p_z_given_x.matrix, atol=1e-12)
    # X -> Z -> S is a Markov chain
    assert J.I("x", "s") <= J.I("x", "z") + 1e-10


@settings(max_examples=40, deadline=None)
@given(cef_instance(), st.floats(0.0, 1e-3), st.floats(0.0, 1e-3))
def test_strategy_feasible_monotone_in_tol(inst, t1, t2):
    spec, px, K = inst
    lo, hi = sorted((t1, t2))
    if strategy_feasible(spec, px, K, lo):
        assert strategy_feasible(spec, px, K, hi)


def test_probvector_input_accepted():
    J = induce_joint(make_c_qp(0.3, 0.1), ProbVector(BINARY, [0.5, 0.5]), [[1, 0], [1, 0]])
    assert abs(J.probs.sum() - 1.0) < 1e-12
