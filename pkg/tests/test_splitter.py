from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tabsim.splitter import (
    QuantizedWeight,
    QuantizedWeightVector,
    SplitterCode,
    dequantize,
    quantize,
    quantize_vector,
    route_current,
    splitter_fraction,
    stage_currents,
)


def _exact_fraction(code: SplitterCode) -> Fraction:
    return sum((Fraction(1, 2**k) for k, b in enumerate(code.stage_bits(), start=1) if b), Fraction(0))


def test_fraction_examples():
    assert splitter_fraction(SplitterCode(1 << 12, 13)) == 0.5
    assert splitter_fraction(SplitterCode(0, 13)) == 0.0
    all_ones = SplitterCode((1 << 13) - 1, 13)
    assert _exact_fraction(all_ones) == 1 - Fraction(1, 2**13)
    assert splitter_fraction(all_ones) == 0.9998779296875


@settings(max_examples=300)
@given(st.integers(1, 24).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 2**n - 1))))
def test_fraction_matches_stage_sum(nb):
    n, bits = nb
    code = SplitterCode(bits, n)
    assert Fraction(splitter_fraction(code)) == _exact_fraction(code)


@pytest.mark.parametrize("bits,width", [(-1, 8), (256, 8), (0, 0), (0, 25)])
def test_invalid_codes(bits, width):
    with pytest.raises(ValueError):
        SplitterCode(bits, width)


def test_stage_currents_sum_to_input():
    s = stage_currents(1e-9, 13)
    assert len(s) == 14
    assert s[0] == 0.5e-9 and s[-1] == s[-2]
    assert s.sum() == pytest.approx(1e-9, rel=1e-15)


def test_route_examples():
    assert route_current(1e-9, SplitterCode(0, 13)) == (0.0, 1e-9)
    good, dump = route_current(2e-9, SplitterCode(1 << 12, 13))
    assert good == pytest.approx(1e-9, rel=1e-15) and dump == pytest.approx(1e-9, rel=1e-15)
    with pytest.raises(ValueError):
        route_current(-1e-12, SplitterCode(3, 13))


def test_route_agrees_with_ladder():
    code = SplitterCode(0b1011001110101, 13)
    branches = stage_currents(7e-9, 13)
    on = np.array(code.stage_bits() + [0], dtype=bool)
    good, dump = route_current(7e-9, code)
    assert good == pytest.approx(branches[on].sum(), rel=1e-15)
    assert dump == pytest.approx(branches[~on].sum(), rel=1e-15)


codes = st.integers(1, 24).flatmap(lambda n: st.builds(SplitterCode, st.integers(0, 2**n - 1), st.just(n)))


@settings(max_examples=300)
@given(st.one_of(st.just(0.0), st.floats(1e-20, 1e-3)), codes)
def test_route_conservation(i_in, code):
    good, dump = route_current(i_in, code)
    assert abs(good + dump - i_in) <= 1e-15 * i_in


@settings(max_examples=200)
@given(st.floats(0, 1e-6), st.floats(0, 1e-6), st.floats(0, 10), codes)
def test_route_linear(a, b, k, code):
    ga, _ = route_current(a, code)
    gb, _ = route_current(b, code)
    gab, _ = route_current(k * a + b, code)
    assert gab == pytest.approx(k * ga + gb, rel=1e-12, abs=1e-30)


def test_quantize_examples():
    q = quantize(0.5, 13)
    assert q.sign == 1 and q.code.bits == 4096
    q = quantize(-1 + 2**-14, 13)
    assert q.sign == -1 and q.code.bits == 8191
    assert quantize(0.0, 13).sign == 1
    q = quantize(0.3, 13)
    # nearest 13-bit code to 0.3, by exact arithmetic
    best = min(range(2**13), key=lambda m: abs(Fraction(m, 2**13) - Fraction(3, 10)))
    assert q.code.bits == best == 2458
    assert abs(dequantize(q) - 0.3) <= 2**-14


def test_round_half_away_from_zero():
    assert quantize(2.5 / 2**8, 8).code.bits == 3
    assert quantize(-2.5 / 2**8, 8).code.bits == 3


@pytest.mark.parametrize("w", [1.0000001, -1.5, float("nan")])
def test_quantize_rejects(w):
    with pytest.raises(ValueError):
        quantize(w, 13)


@settings(max_examples=500)
@given(st.integers(1, 24).flatmap(lambda n: st.tuples(st.just(n), st.floats(-1 + 2.0**-n, 1 - 2.0**-n))))
def test_round_trip_bound(nw):
    n, w = nw
    assert abs(dequantize(quantize(w, n)) - w) <= 2.0 ** -(n + 1)


@settings(max_examples=500)
@given(st.integers(1, 16), st.floats(-1, 1), st.floats(-1, 1))
def test_monotone(n, a, b):
    a, b = sorted((a, b))
    assert dequantize(quantize(a, n)) <= dequantize(quantize(b, n))


@settings(max_examples=300)
@given(st.integers(1, 24).flatmap(lambda n: st.tuples(st.just(n), st.integers(-(2**n) + 1, 2**n - 1))))
def test_dyadics_exact(nm):
    n, m = nm
    w = m / 2**n
    assert dequantize(quantize(w, n)) == w


def test_vector_scale_and_values():
    w = np.array([0.2, -4.0, 1.0, 0.0])
    qv = quantize_vector(w, 13)
    assert qv.scale == 4.0
    assert qv.weights[1].sign == -1 and qv.weights[1].code.bits == 8191
    np.testing.assert_allclose(qv.values(), w, atol=4.0 * 2**-13)
    assert quantize_vector(np.zeros(3), 8).scale == 1.0


def test_vector_invariants():
    with pytest.raises(ValueError):
        QuantizedWeightVector((QuantizedWeight(1, SplitterCode(1, 4)),), 0.0)
    with pytest.raises(ValueError):
        QuantizedWeight(0, SplitterCode(1, 4))
