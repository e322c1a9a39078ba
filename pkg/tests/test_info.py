import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wiretap_csi.channel import example_channel, induce_joint, CausalPolicy
from wiretap_csi.errors import DomainError
from wiretap_csi.info import (
    Alphabet,
    JointPmf,
    binary_entropy,
    conditional_entropy,
    conditional_mutual_information,
    entropy,
    entropy_of_table,
    inverse_binary_entropy,
    marginalize,
    mutual_information,
    product_pmf,
)

A, B, C, D = (Alphabet(n, 2) for n in "ABCD")


def h(q):
    # independent oracle for the binary entropy
    return -sum(p * math.log2(p) for p in (q, 1 - q) if p > 0)


def pair(table):
    return JointPmf([A, B], np.asarray(table, dtype=float))


# ---------------------------------------------------------------------------
# construction


def test_alphabet_rejects_empty():
    with pytest.raises(DomainError):
        Alphabet("X", 0)


def test_jointpmf_rejects_bad_tables():
    with pytest.raises(DomainError):
        pair([[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(DomainError):
        pair([[1.2, -0.2], [0.0, 0.0]])
    with pytest.raises(DomainError):
        JointPmf([A, B], [0.5, 0.5])
    with pytest.raises(DomainError):
        JointPmf([A, Alphabet("A", 2)], np.full((2, 2), 0.25))


def test_jointpmf_is_immutable_copy():
    src = np.full((2, 2), 0.25)
    p = pair(src)
    src[0, 0] = 9.0
    assert p.table[0, 0] == 0.25
    with pytest.raises(ValueError):
        p.table[0, 0] = 0.5


def test_unknown_variable():
    with pytest.raises(DomainError):
        entropy(pair(np.full((2, 2), 0.25)), "Q")


# ---------------------------------------------------------------------------
# entropy


def test_entropy_examples():
    assert entropy(JointPmf([Alphabet("X", 4)], np.full(4, 0.25)), "X") == pytest.approx(2.0, abs=1e-15)
    assert entropy(JointPmf([A], [1.0, 0.0]), "A") == 0.0
    assert entropy(JointPmf([A], [0.1, 0.9]), "A") == pytest.approx(0.4689956, abs=1e-7)


def test_binary_entropy_examples():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.1) == pytest.approx(0.4689956, abs=1e-7)
    for bad in (-0.1, 1.1):
        with pytest.raises(DomainError):
            binary_entropy(bad)


@given(st.floats(0.0, 1.0))
def test_inverse_binary_entropy_roundtrip(value):
    q = inverse_binary_entropy(value)
    assert 0.0 <= q <= 0.5
    assert abs(binary_entropy(q) - value) < 1e-9


def test_conditional_entropy_examples():
    indep = pair(np.full((2, 2), 0.25))
    assert conditional_entropy(indep, "A", "B") == pytest.approx(1.0)
    copy = pair([[0.5, 0.0], [0.0, 0.5]])
    assert conditional_entropy(copy, "A", "B") == 0.0
    q = 0.2
    sz = product_pmf((Alphabet("S", 2), [1 - q, q]), (Alphabet("Z", 2), [0.5, 0.5]))
    assert conditional_entropy(sz, "S", "Z") == pytest.approx(h(q), abs=1e-12)
    with pytest.raises(DomainError):
        conditional_entropy(indep, "A", ("A", "B"))


def test_mutual_information_examples():
    assert mutual_information(pair(np.full((2, 2), 0.25)), "A", "B") == 0.0
    assert mutual_information(pair([[0.5, 0.0], [0.0, 0.5]]), "A", "B") == pytest.approx(1.0)
    bsc = pair([[0.45, 0.05], [0.05, 0.45]])
    assert mutual_information(bsc, "A", "B") == pytest.approx(0.5310044, abs=1e-7)
    assert mutual_information(bsc, "A", "B") == pytest.approx(1 - h(0.1), abs=1e-12)
    with pytest.raises(DomainError):
        mutual_information(bsc, "A", "A")


def test_conditional_mi_examples():
    rng = np.random.default_rng(0)
    t = rng.random((2, 2))
    t /= t.sum()
    with_const = JointPmf([A, B, Alphabet("K", 1)], t[:, :, None])
    assert conditional_mutual_information(with_const, "A", "B", "K") == pytest.approx(
        mutual_information(with_const, "A", "B"), abs=1e-12
    )
    # C is a copy of A
    copy = np.zeros((2, 2, 2))
    for a in range(2):
        for b in range(2):
            copy[a, b, a] = t[a, b]
    p = JointPmf([A, B, C], copy)
    assert conditional_mutual_information(p, "A", "B", "C") == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        conditional_mutual_information(p, "A", "B", ("B",))


def test_figure2_conditional_mi():
    ch = example_channel()
    pol = CausalPolicy.independent([0.5, 0.5], np.tile(np.eye(2)[:, None, :], (1, 2, 1)))
    joint = induce_joint(ch, pol)
    assert conditional_mutual_information(joint, "X", "Z", "S") == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(marginalize(joint, "S").table, ch.p_s, atol=1e-15)


def test_marginalize_examples():
    rng = np.random.default_rng(1)
    t = rng.random((2, 2, 2))
    p = JointPmf([A, B, C], t / t.sum())
    assert np.array_equal(marginalize(p, ("A", "B", "C")).table, p.table)
    swapped = marginalize(p, ("C", "A"))
    assert swapped.names == ("C", "A")
    assert np.allclose(swapped.table, p.table.sum(axis=1).T)
    prod = product_pmf((A, [0.3, 0.7]), (B, [0.6, 0.4]))
    assert np.allclose(marginalize(prod, "B").table, [0.6, 0.4])
    with pytest.raises(DomainError):
        marginalize(p, ())


def test_entropy_of_table_ignores_structural_zeros():
    assert entropy_of_table([0.5, 0.5, 0.0, 1e-17]) == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# properties on random small joints


@st.composite
def joints(draw, n_vars=4):
    weights = draw(
        st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=2**n_vars, max_size=2**n_vars).filter(
            lambda w: sum(w) > 1e-3
        )
    )
    t = np.array(weights)
    return JointPmf([A, B, C, D][:n_vars], t / t.sum())


@settings(max_examples=200)
@given(joints())
def test_chain_rule(p):
    lhs = mutual_information(p, "A", ("B", "C"))
    rhs = mutual_information(p, "A", "C") + conditional_mutual_information(p, "A", "B", "C")
    assert abs(lhs - rhs) < 1e-10


@settings(max_examples=200)
@given(joints())
def test_nonnegativity_and_ceiling(p):
    for v in "ABCD":
        assert 0.0 <= entropy(p, v) <= 1.0 + 1e-10
    assert conditional_entropy(p, "A", ("B", "C")) >= 0.0
    assert mutual_information(p, ("A", "B"), "D") >= 0.0
    assert conditional_mutual_information(p, "A", "B", ("C", "D")) >= 0.0
    assert entropy(p, ("A", "B", "C", "D")) <= 4.0 + 1e-10


@settings(max_examples=200)
@given(
    st.lists(st.floats(0.01, 1.0), min_size=2, max_size=2),
    st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4),
    st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4),
)
def test_data_processing(pa, wb, wc):
    pa = np.array(pa) / sum(pa)
    w1 = np.array(wb).reshape(2, 2) + 1e-3
    w1 /= w1.sum(axis=1, keepdims=True)
    w2 = np.array(wc).reshape(2, 2) + 1e-3
    w2 /= w2.sum(axis=1, keepdims=True)
    table = pa[:, None, None] * w1[:, :, None] * w2[None, :, :]
    p = JointPmf([A, B, C], table)
    assert mutual_information(p, "A", "C") <= mutual_information(p, "A", "B") + 1e-10


@settings(max_examples=100)
@given(joints(), st.sampled_from([("A",), ("B", "D"), ("C", "A", "D"), ("D", "C", "B", "A")]))
def test_marginal_consistency(p, keep):
    assert abs(entropy(marginalize(p, keep), keep) - entropy(p, keep)) < 1e-12
