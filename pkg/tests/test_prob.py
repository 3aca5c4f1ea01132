import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kamac import (
    Alphabet,
    DomainError,
    JointPmf,
    Pmf,
    ValidationError,
    conditional_entropy,
    coupling_mixture_entropy,
    entropy,
    joint_entropy,
    maximal_coupling,
    pushforward,
)
from kamac.prob import as_prob, as_symbol, binary_entropy, branch_determined, entropy_of


def _pmf(weights, symbols=None):
    total = sum(weights)
    symbols = symbols or list(range(len(weights)))
    return Pmf(symbols, tuple(Fraction(w, total) for w in weights))


weights = st.lists(st.integers(0, 12), min_size=1, max_size=6).filter(lambda w: sum(w) > 0)


def test_coercions():
    assert as_prob("1/3") == Fraction(1, 3)
    assert isinstance(as_prob(0.25), float)
    assert as_symbol(Fraction(4, 2)) == 2 and isinstance(as_symbol(Fraction(4, 2)), int)
    assert as_symbol("-2") == -2


def test_alphabet_must_increase():
    with pytest.raises(ValidationError):
        Alphabet((0, 2, 1))
    with pytest.raises(ValidationError):
        Alphabet(())


def test_pmf_mass_and_sign():
    with pytest.raises(ValidationError, match="sum"):
        Pmf([0, 1], ("1/2", "2/5"))
    with pytest.raises(ValidationError):
        Pmf([0, 1], ("3/2", "-1/2"))
    assert Pmf.uniform([0, 1, 2]).exact


def test_known_entropies():
    assert entropy(Pmf.uniform(range(4))) == pytest.approx(2.0, abs=1e-15)
    assert entropy_of([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)]) == pytest.approx(1.5)
    assert binary_entropy(Fraction(1, 6)) == pytest.approx(0.6500224216483541)
    assert binary_entropy(Fraction(1, 4)) == pytest.approx(0.8112781244591328)
    assert entropy_of([0.4, 0.4, 0.2]) == pytest.approx(1.5219280948873621)


def test_product_and_marginals():
    a, b = _pmf([1, 2, 3]), _pmf([1, 1], symbols=[-1, 5])
    j = JointPmf.product(a, b)
    assert j.exact and j.n == 2
    assert j.marginal_pmf(0) == a and j.marginal_pmf(1) == b
    assert j.prob((2, 5)) == Fraction(1, 4)
    swapped = j.marginal([1, 0])
    assert swapped.alphabets[0].symbols == (-1, 5)
    assert swapped.prob((5, 2)) == Fraction(1, 4)


def test_from_support_fills_zeros():
    j = JointPmf.from_support({(0, 1): "1/2", (1, 0): "1/2"})
    assert j.prob((0, 0)) == 0
    assert [x for x, _ in j.support()] == [(0, 1), (1, 0)]
    assert conditional_entropy(j, [0], [1]) == pytest.approx(0.0)


def test_table_is_read_only():
    j = JointPmf.product(Pmf.uniform([0, 1]), Pmf.uniform([0, 1]))
    with pytest.raises(ValueError):
        j.table[0, 0] = 1


def test_conditional_entropy_index_errors():
    j = JointPmf.product(Pmf.uniform([0, 1]), Pmf.uniform([0, 1]))
    with pytest.raises(ValidationError):
        conditional_entropy(j, [0], [0])
    with pytest.raises(ValidationError):
        conditional_entropy(j, [2], [])


def test_pushforward_undefined_raises():
    j = JointPmf.product(Pmf.uniform([0, 1]))
    with pytest.raises(DomainError):
        pushforward(j, lambda x: 1 / x[0])


def test_coupling_worked_example():
    c = maximal_coupling(Pmf([0, 1, 4], ["1/3"] * 3), Pmf([0, 1, 4], ["1/2", "1/4", "1/4"]))
    assert c.delta == Fraction(1, 6)
    assert c.pT.probs == (Fraction(2, 5), Fraction(3, 10), Fraction(3, 10))
    assert c.pV.probs == (0, Fraction(1, 2), Fraction(1, 2))
    assert c.pW.probs == (1, 0, 0)
    assert branch_determined(c)
    assert entropy(c.pT) == pytest.approx(1.5709505944546684)
    assert coupling_mixture_entropy(c) == pytest.approx(joint_entropy(c.joint), abs=1e-12)
    assert conditional_entropy(c.joint, [1], [0]) == pytest.approx(0.5408520829727552, abs=1e-9)


def test_coupling_degenerate_cases():
    p = Pmf.uniform([0, 1])
    same = maximal_coupling(p, p)
    assert same.delta == 0 and same.pV is None and same.pW is None
    with pytest.raises(DomainError):
        coupling_mixture_entropy(same)
    apart = maximal_coupling(Pmf([0, 1], [1, 0]), Pmf([0, 1], [0, 1]))
    assert apart.delta == 1 and apart.pT is None


@given(weights, weights)
@settings(max_examples=60, deadline=None)
def test_chain_rule_and_bounds(wa, wb):
    j = JointPmf.product(_pmf(wa), _pmf(wb))
    h1, h2 = entropy(j.marginal_pmf(0)), entropy(j.marginal_pmf(1))
    assert joint_entropy(j) == pytest.approx(h1 + h2, abs=1e-12)
    assert conditional_entropy(j, [1], [0]) == pytest.approx(h2, abs=1e-12)
    assert -1e-12 <= h1 <= math.log2(len(wa)) + 1e-12


@given(st.lists(st.integers(0, 9), min_size=4, max_size=12).filter(lambda w: sum(w) > 0))
@settings(max_examples=60, deadline=None)
def test_chain_rule_correlated(w):
    k = len(w) // 2
    w = w[: 2 * k]
    if sum(w) == 0:
        return
    table = np.array([Fraction(v, sum(w)) for v in w], dtype=object).reshape(2, k)
    j = JointPmf([[0, 1], list(range(k))], table)
    lhs = joint_entropy(j)
    rhs = entropy(j.marginal_pmf(0)) + conditional_entropy(j, [1], [0])
    assert lhs == pytest.approx(rhs, abs=1e-12)
    # functions never increase entropy
    assert entropy(pushforward(j, lambda x: (x[0] + x[1]) % 2)) <= lhs + 1e-12


@given(weights.filter(lambda w: len(w) >= 2), st.randoms(use_true_random=False))
@settings(max_examples=60, deadline=None)
def test_coupling_properties(w, rnd):
    v = list(w)
    rnd.shuffle(v)
    if sum(v) == 0:
        return
    p, q = _pmf(w), _pmf(v)
    c = maximal_coupling(p, q)
    assert c.joint.marginal_pmf(0) == p and c.joint.marginal_pmf(1) == q
    tv = sum(abs(a - b) for a, b in zip(p.probs, q.probs)) / 2
    assert c.delta == tv
    diag = sum(c.joint.prob((s, s)) for s in p.symbols)
    assert diag == 1 - c.delta
    if 0 < c.delta < 1 and branch_determined(c):
        assert coupling_mixture_entropy(c) == pytest.approx(joint_entropy(c.joint), abs=1e-9)
