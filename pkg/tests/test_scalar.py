from __future__ import annotations

import cmath
import pickle
from fractions import Fraction

import gmpy2
import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sl21.scalar import (
    Context,
    ScalarError,
    as_fraction,
    bracket,
    fraction_str,
    qfactorial,
    qint,
    qnum,
    rel_diff,
    scalar_from_json,
    scalar_to_json,
    xi_pow,
)

fractions = st.fractions(min_value=-50, max_value=50, max_denominator=30)


def mp_xi(ell, x, dps=50):
    with mpmath.workdps(dps):
        return mpmath.exp(2j * mpmath.pi * mpmath.mpf(x.numerator) / mpmath.mpf(x.denominator) / ell)


def test_context_validation():
    for bad in (dict(ell=4), dict(ell=1), dict(ell=3, tol=0), dict(ell=3, tol=float("nan")),
                dict(ell=3, precision=30), dict(ell=3, corrupt="bogus")):
        with pytest.raises(ValueError):
            Context(**bad)
    assert Context(3).precision == 106 and Context(3).tol == 1e-20
    f = Context.fast(5)
    assert f.is_double and f.tol == 1e-8


def test_xi_precision_independent_of_thread_state():
    import threading

    ctx = Context(3, precision=150)
    out = {}

    def worker():
        out["z"] = xi_pow(ctx, Fraction(1, 7 * 13))

    t = threading.Thread(target=worker)
    t.start()
    t.join()
    assert out["z"].real.precision >= 150


def test_context_pickles_and_activates():
    c = Context(3, precision=200)
    c2 = pickle.loads(pickle.dumps(c))
    assert c2 == c
    assert gmpy2.get_context().precision >= 200


def test_xi_pow_examples(ctx):
    assert rel_diff(xi_pow(ctx, 0), 1) == 0
    assert rel_diff(xi_pow(ctx, 3), 1) < 1e-30
    oracle = complex(mp_xi(3, Fraction(1, 2)))
    assert abs(complex(xi_pow(ctx, Fraction(1, 2))) - cmath.exp(1j * cmath.pi / 3)) < 1e-15
    assert abs(complex(xi_pow(ctx, Fraction(1, 2))) - oracle) < 1e-15


@given(fractions)
@settings(max_examples=60, deadline=None)
def test_xi_pow_matches_mpmath_oracle(x):
    ctx = Context(7)
    got = xi_pow(ctx, x)
    with mpmath.workdps(50):
        err = abs(mpmath.mpc(str(got.real), str(got.imag)) - mp_xi(7, x))
    assert err < 1e-30


@given(fractions)
@settings(max_examples=60, deadline=None)
def test_xi_pow_periodic(x):
    ctx = Context(5)
    assert rel_diff(xi_pow(ctx, x + 5), xi_pow(ctx, x)) <= ctx.tol


@given(fractions)
@settings(max_examples=60, deadline=None)
def test_bracket_antisymmetric(x):
    ctx = Context(3)
    assert rel_diff(bracket(ctx, x), -bracket(ctx, -x)) <= ctx.tol


def test_bracket_examples(ctx):
    assert abs(bracket(ctx, 0)) == 0
    want = 2j * cmath.sin(2 * cmath.pi / 3)
    assert abs(complex(bracket(ctx, 1)) - want) < 1e-15
    assert rel_diff(qnum(ctx, 1), 1) <= ctx.tol


def test_qint_and_qfactorial():
    ctx = Context(5)
    assert rel_diff(qint(ctx, 1), 1) <= ctx.tol
    assert rel_diff(qfactorial(ctx, 0), 1) == 0
    direct = ctx.one
    for k in range(1, 5):
        direct *= (1 - xi_pow(ctx, k)) / (1 - xi_pow(ctx, 1))
    assert rel_diff(qfactorial(ctx, 4), direct) <= ctx.tol
    for i in range(5):
        for base in (1, -2):
            assert abs(qfactorial(ctx, i, base)) > 1e-3
    with pytest.raises(ScalarError):
        qfactorial(ctx, 5)
    with pytest.raises(ScalarError):
        qfactorial(ctx, -1)
    with pytest.raises(ScalarError):
        qint(ctx, 1, base=5)


def test_qfactorial_bases_agree_only_at_ell_3():
    c3, c5 = Context(3), Context(5)
    assert rel_diff(qfactorial(c3, 2, 1), qfactorial(c3, 2, -2)) <= c3.tol
    assert rel_diff(qfactorial(c5, 2, 1), qfactorial(c5, 2, -2)) > 0.1


def test_non_finite_rejected(ctx):
    with pytest.raises(ScalarError):
        xi_pow(ctx, float("nan"))


def test_fraction_parsing():
    assert as_fraction("3/7") == Fraction(3, 7)
    assert as_fraction(2) == 2
    assert fraction_str(Fraction(-3, 7)) == "-3/7"
    assert fraction_str(Fraction(4)) == "4"


@given(fractions)
@settings(max_examples=40, deadline=None)
def test_scalar_json_roundtrip_exact(x):
    ctx = Context(3)
    z = xi_pow(ctx, x) * 3
    back = scalar_from_json(ctx, scalar_to_json(z))
    assert back == z


def test_double_profile_json(fast):
    z = xi_pow(fast, Fraction(1, 3))
    assert scalar_from_json(fast, scalar_to_json(z)) == z


def test_close_is_scale_aware(ctx):
    assert ctx.close(1e30, 1e30 * (1 + 1e-22))
    assert not ctx.close(1.0, 1.0 + 1e-15)
