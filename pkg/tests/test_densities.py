import io
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpa.densities import (DeBruijnDensity, SparseDensity, l1_distance, marginal,
                           mixture, normalize, prune, read_marginals_csv, shift,
                           write_marginals_csv)
from cpa.errors import WindowMismatchError, ZeroMassError
from cpa.windows import Interval

W2 = Interval(0, 1)


def d2(a, b):
    return SparseDensity(W2, 2, {0: a, 3: b})


@st.composite
def densities(draw, window=W2, n_symbols=2):
    size = n_symbols ** len(window)
    raw = draw(st.lists(st.floats(0.0, 1.0), min_size=size, max_size=size))
    total = sum(raw)
    if total == 0:
        raw[0] = 1.0
        total = 1.0
    return SparseDensity(window, n_symbols,
                         {i: w / total for i, w in enumerate(raw) if w > 0})


def test_normalize():
    d = normalize(d2(2.0, 2.0))
    assert d.weights == {0: 0.5, 3: 0.5}
    single = SparseDensity(W2, 2, {1: 1.0})
    assert normalize(single).weights == {1: 1.0}
    with pytest.raises(ZeroMassError):
        normalize(SparseDensity(W2, 2, {}))


def test_prune():
    d = normalize(SparseDensity(W2, 2, {0: 0.99995, 1: 0.00005}))
    assert prune(d, 0.0001).weights == {0: 1.0}
    d = d2(0.6, 0.4)
    assert prune(d, 0.0) is d
    assert prune(d, 0.5).weights == {0: 1.0}
    with pytest.raises(ZeroMassError):
        prune(d2(0.5, 0.5), 0.9)
    with pytest.raises(ValueError):
        prune(d, 1.0)


def test_l1_examples():
    assert l1_distance(d2(0.5, 0.5), d2(0.5, 0.5)) == 0.0
    a = SparseDensity(W2, 2, {0: 1.0})
    b = SparseDensity(W2, 2, {3: 1.0})
    assert l1_distance(a, b) == 2.0
    assert l1_distance(d2(0.7, 0.3), d2(0.5, 0.5)) == pytest.approx(0.4)
    with pytest.raises(WindowMismatchError):
        l1_distance(a, SparseDensity(Interval(0, 2), 2, {0: 1.0}))


def test_marginal_worked_example():
    # two supported global patterns over three sites, mass p and 1-p
    p = 0.3
    g = SparseDensity.from_patterns(Interval(0, 2), 2,
                                    {(0, 0, 1): p, (1, 0, 0): 1 - p})
    m = marginal(g, Interval(0, 1))
    assert m.patterns() == {(0, 0): pytest.approx(p), (1, 0): pytest.approx(1 - p)}
    assert marginal(g, g.window).weights == g.weights
    point = SparseDensity.point(Interval(0, 2), 2, (1, 0, 1))
    assert marginal(point, Interval(1, 2)).patterns() == {(0, 1): 1.0}
    with pytest.raises(WindowMismatchError):
        marginal(g, Interval(0, 3))


@given(densities(), densities(), densities())
def test_l1_triangle(a, b, c):
    assert l1_distance(a, c) <= l1_distance(a, b) + l1_distance(b, c) + 1e-12


@given(densities(window=Interval(0, 2), n_symbols=2), densities(window=Interval(0, 2), n_symbols=2),
       st.floats(0.01, 0.99))
def test_marginal_commutes_with_mixture(a, b, lam):
    sub = Interval(1, 2)
    direct = marginal(mixture([(lam, a), (1 - lam, b)]), sub)
    mixed = mixture([(lam, marginal(a, sub)), (1 - lam, marginal(b, sub))])
    assert l1_distance(direct, mixed) < 1e-12


def test_shift_keeps_codes():
    d = d2(0.25, 0.75)
    s = shift(d, -3)
    assert s.window == Interval(-3, -2)
    assert s.weights == d.weights


def test_debruijn_container():
    per_site = {i: d2(0.5, 0.5) for i in range(3)}
    g = DeBruijnDensity(Interval(0, 2), W2, per_site)
    assert g.at(1).weights == {0: 0.5, 3: 0.5}
    sub = g.restrict(Interval(1, 2))
    assert list(sub.sites) == [1, 2]
    shifted = g.shift(5)
    assert list(shifted.sites) == [5, 6, 7]
    with pytest.raises(WindowMismatchError):
        g.at(9)
    singles = g.site_marginals()
    assert singles[0].patterns() == {(0,): pytest.approx(0.5), (1,): pytest.approx(0.5)}


def test_debruijn_validation():
    with pytest.raises(ValueError):
        DeBruijnDensity(Interval(0, 1), W2, {0: d2(1.0, 0.0)})
    with pytest.raises(WindowMismatchError):
        DeBruijnDensity(Interval(0, 0), W2,
                        {0: SparseDensity(Interval(0, 2), 2, {0: 1.0})})


def test_negative_weight_rejected():
    with pytest.raises(ValueError):
        SparseDensity(W2, 2, {0: -0.1})


def test_marginals_csv_roundtrip():
    site0 = SparseDensity(Interval(0, 0), 25, {6: 0.25, 9: 0.75})
    site1 = SparseDensity(Interval(0, 0), 25, {0: 1.0})
    buf = io.StringIO()
    write_marginals_csv(buf, {2: site0, 1: site1}, (5, 5))
    buf.seek(0)
    back = read_marginals_csv(buf)
    assert back[2][(1, 1)] == 0.25 and back[2][(1, 4)] == 0.75
    assert back[1][(0, 0)] == 1.0
    assert math.isclose(sum(back[2].values()), 1.0)
