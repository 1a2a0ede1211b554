"""Exact pmf machinery: marginals, conditioning, information, composition."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from zdmn import networks
from zdmn.errors import DomainError, SpecIOError, ZeroProbabilityEvent
from zdmn.model import ChannelTable
from zdmn.probability import (
    JointPmf,
    binary_entropy,
    compose_channels,
    condition,
    conditional_mutual_information,
    factorized_joint,
    input_conditional_vars,
    joint_from_dict,
    joint_to_dict,
    load_joint,
    marginalize,
    mutual_information,
    product_input_joint,
    save_joint,
)


def _joint(names_sizes, flat):
    return JointPmf(tuple(names_sizes), np.asarray(flat, dtype=np.float64))


def _random_joint(seed: int, sizes=(2, 2, 2)) -> JointPmf:
    rng = np.random.Generator(np.random.Philox(seed))
    cells = int(np.prod(sizes))
    probs = rng.dirichlet(np.ones(cells))
    names = tuple((f"V{i}", s) for i, s in enumerate(sizes))
    return JointPmf(names, probs)


# ---------------------------------------------------------------------------
# table basics


def test_joint_validate_catches_problems():
    ok = _joint((("A", 2),), [0.25, 0.75])
    assert ok.validate() == []
    assert _joint((("A", 2),), [-0.1, 1.1]).validate()
    assert _joint((("A", 2),), [0.4, 0.4]).validate()
    assert _joint((("A", 2),), [0.5, 0.3, 0.2]).validate()


def test_marginalize_product_structure():
    # independent pair: p(a, b) = p(a) p(b)
    pa = np.array([0.3, 0.7])
    pb = np.array([0.1, 0.2, 0.7])
    p = _joint((("A", 2), ("B", 3)), np.outer(pa, pb).reshape(-1))
    assert np.allclose(marginalize(p, ("A",)).probs, pa)
    assert np.allclose(marginalize(p, ("B",)).probs, pb)
    # keep-order is respected: (B, A) transposes the table
    ba = marginalize(p, ("B", "A"))
    assert ba.names == ("B", "A")
    assert np.allclose(ba.as_array(), np.outer(pb, pa))


def test_marginalize_rejects_bad_lists():
    p = _joint((("A", 2), ("B", 2)), [0.25] * 4)
    with pytest.raises(DomainError):
        marginalize(p, ("A", "A"))
    with pytest.raises(DomainError):
        marginalize(p, ("C",))


def test_condition_hand_oracle():
    # p(A, B) with rows A: [0.1, 0.3; 0.2, 0.4]
    p = _joint((("A", 2), ("B", 2)), [0.1, 0.3, 0.2, 0.4])
    c = condition(p, {"A": 1})
    assert c.names == ("B",)
    assert np.allclose(c.probs, [0.2 / 0.6, 0.4 / 0.6])
    c2 = condition(p, {"B": 0})
    assert np.allclose(c2.probs, [0.1 / 0.3, 0.2 / 0.3])


def test_condition_zero_probability_event():
    p = _joint((("A", 2), ("B", 2)), [0.5, 0.5, 0.0, 0.0])
    with pytest.raises(ZeroProbabilityEvent):
        condition(p, {"A": 1})
    with pytest.raises(DomainError):
        condition(p, {"A": 2})


# ---------------------------------------------------------------------------
# information quantities


def test_mutual_information_independent_is_zero():
    p = _joint((("A", 2), ("B", 2)), np.outer([0.3, 0.7], [0.6, 0.4]).reshape(-1))
    assert 0.0 <= mutual_information(p, ("A",), ("B",)) <= 1e-12


def test_mutual_information_perfect_copy_is_one_bit():
    p = _joint((("A", 2), ("B", 2)), [0.5, 0.0, 0.0, 0.5])
    assert abs(mutual_information(p, ("A",), ("B",)) - 1.0) < 1e-12


def test_mutual_information_binary_channel_closed_form():
    for eps in (0.05, 0.11, 0.25):
        flat = [0.5 * (1 - eps), 0.5 * eps, 0.5 * eps, 0.5 * (1 - eps)]
        p = _joint((("X", 2), ("Y", 2)), flat)
        want = 1.0 - binary_entropy(eps)
        assert abs(mutual_information(p, ("X",), ("Y",)) - want) < 1e-12


def test_cmi_empty_group_is_zero():
    p = _random_joint(7)
    assert conditional_mutual_information(p, (), ("V0",), ("V1",)) == 0.0
    assert conditional_mutual_information(p, ("V0",), (), ()) == 0.0


def test_cmi_rejects_overlapping_groups():
    p = _random_joint(7)
    with pytest.raises(DomainError):
        conditional_mutual_information(p, ("V0",), ("V0",), ())


def test_cmi_markov_chain_is_zero():
    # construct A -> B -> C: p(a, b, c) = p(a) q(b|a) r(c|b)
    rng = np.random.Generator(np.random.Philox(12))
    pa = rng.dirichlet((1, 1))
    q = rng.dirichlet((1, 1), size=2)
    r = rng.dirichlet((1, 1), size=2)
    flat = np.einsum("a,ab,bc->abc", pa, q, r).reshape(-1)
    p = _joint((("A", 2), ("B", 2), ("C", 2)), flat)
    assert conditional_mutual_information(p, ("A",), ("C",), ("B",)) <= 1e-12
    # data processing: I(A;C) <= I(A;B)
    assert mutual_information(p, ("A",), ("C",)) <= mutual_information(
        p, ("A",), ("B",)
    ) + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_cmi_chain_rule(seed):
    # I(A; B, C | D) = I(A; B | D) + I(A; C | B, D)
    p = _random_joint(seed, sizes=(2, 2, 2, 2))
    a, b, c, d = ("V0",), ("V1",), ("V2",), ("V3",)
    lhs = conditional_mutual_information(p, a, b + c, d)
    rhs = conditional_mutual_information(p, a, b, d) + conditional_mutual_information(
        p, a, c, b + d
    )
    assert abs(lhs - rhs) <= 1e-9
    assert lhs >= 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_cmi_nonnegative_and_clamped(seed):
    p = _random_joint(seed, sizes=(3, 2, 2))
    v = conditional_mutual_information(p, ("V0",), ("V1",), ("V2",))
    assert v >= 0.0


def test_binary_entropy_values():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert abs(binary_entropy(0.5) - 1.0) < 1e-15
    for eps in (0.05, 0.11, 0.25, 0.4):
        assert abs(binary_entropy(eps) - binary_entropy(1 - eps)) < 1e-15
        want = stats.entropy([eps, 1 - eps], base=2)
        assert abs(binary_entropy(eps) - want) < 1e-12
    with pytest.raises(DomainError):
        binary_entropy(-0.1)
    with pytest.raises(DomainError):
        binary_entropy(1.1)


# ---------------------------------------------------------------------------
# channel composition and factorized joints


def _compose_oracle_noisy_feedback(eps):
    """Brute-force composed table for the noisy/noiseless two-node pair."""
    table = np.zeros((4, 4))
    for x1 in range(2):
        for x2 in range(2):
            row = x1 * 2 + x2
            for y2 in range(2):
                p1 = (1 - eps) if y2 == x1 else eps
                y1 = x2 ^ y2
                table[row, y1 * 2 + y2] += p1
    return table


def test_compose_channels_matches_bruteforce():
    eps = 0.11
    spec = networks.bscfb_spec(eps)
    composed = compose_channels(spec)
    assert composed.input_vars == ("X1", "X2")
    assert composed.output_vars == ("Y1", "Y2")
    assert np.allclose(composed.table, _compose_oracle_noisy_feedback(eps), atol=1e-15)


def test_compose_channels_single_channel_is_identity_copy():
    spec = networks.classical_bsc_spec(0.25)
    composed = compose_channels(spec)
    assert np.allclose(composed.table, spec.channels[0].table)


def test_factorized_joint_zero_delay_scheme():
    # node 1 sends a fair bit; node 2 repeats its current reception
    eps = 0.11
    spec = networks.bscfb_spec(eps)
    in1, out1 = input_conditional_vars(spec, 1)
    in2, out2 = input_conditional_vars(spec, 2)
    assert (in1, out1) == ((), ("X1",))
    assert (in2, out2) == (("X1", "Y2"), ("X2",))
    c1 = ChannelTable(in1, out1, np.array([[0.5, 0.5]]))
    echo = np.zeros((4, 2))
    for x1 in range(2):
        for y2 in range(2):
            echo[x1 * 2 + y2, y2] = 1.0
    c2 = ChannelTable(in2, out2, echo)
    joint = factorized_joint(spec, (c1, c2))
    assert joint.validate() == []
    # oracle by full enumeration of the generation order
    oracle = np.zeros((2, 2, 2, 2))  # (x1, x2, y1, y2)
    for x1 in range(2):
        for y2 in range(2):
            p = 0.5 * ((1 - eps) if y2 == x1 else eps)
            x2 = y2
            y1 = x2 ^ y2
            oracle[x1, x2, y1, y2] += p
    got = marginalize(joint, ("X1", "X2", "Y1", "Y2"))
    assert np.allclose(got.as_array(), oracle, atol=1e-15)
    # with the echo code the feedback output is the constant 0
    y1 = marginalize(joint, ("Y1",))
    assert np.allclose(y1.probs, [1.0, 0.0])


def test_factorized_joint_rejects_wrong_conditionals():
    spec = networks.bscfb_spec(0.11)
    in1, out1 = input_conditional_vars(spec, 1)
    c1 = ChannelTable(in1, out1, np.array([[0.5, 0.5]]))
    with pytest.raises(DomainError):
        factorized_joint(spec, (c1,))  # wrong count
    bad = ChannelTable(("X9",), ("X1",), np.array([[0.5, 0.5]]))
    with pytest.raises(DomainError):
        factorized_joint(spec, (bad, bad))
    in2, out2 = input_conditional_vars(spec, 2)
    non_stoch = ChannelTable(in2, out2, np.full((4, 2), 0.3))
    with pytest.raises(DomainError):
        factorized_joint(spec, (c1, non_stoch))


def test_product_input_joint_matches_manual_product():
    eps = 0.11
    spec = networks.bscfb_spec(eps)
    px = _joint((("X1", 2), ("X2", 2)), [0.1, 0.2, 0.3, 0.4])
    joint = product_input_joint(spec, px)
    assert joint.validate() == []
    composed = _compose_oracle_noisy_feedback(eps)
    want = px.probs[:, None] * composed  # (4 inputs, 4 outputs)
    got = marginalize(joint, ("X1", "X2", "Y1", "Y2"))
    assert np.allclose(got.probs, want.reshape(-1), atol=1e-15)


def test_product_input_joint_rejects_wrong_variables():
    spec = networks.bscfb_spec(0.11)
    with pytest.raises(DomainError):
        product_input_joint(spec, _joint((("X1", 2),), [0.5, 0.5]))


# ---------------------------------------------------------------------------
# JSON I/O


def test_joint_json_roundtrip(tmp_path):
    p = _random_joint(99, sizes=(2, 3))
    path = tmp_path / "joint.json"
    save_joint(p, path)
    q = load_joint(path)
    assert q.variables == p.variables
    assert np.allclose(q.probs, p.probs, atol=0)
    r = joint_from_dict(joint_to_dict(p))
    assert r.variables == p.variables and np.array_equal(r.probs, p.probs)


def test_joint_json_errors(tmp_path):
    with pytest.raises(SpecIOError):
        load_joint(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(SpecIOError):
        load_joint(bad)
    with pytest.raises(SpecIOError):
        joint_from_dict({"variables": [["A", 2]]})
