from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sl21.modularity import meridian_endo, sprime_double_ratio, sprime_product_identity
from sl21.mtrace import (
    ShiftedWeight,
    TraceError,
    module_modified_dim,
    modified_dim,
    modified_dim_alpha,
    mtrace,
    sprime_diagrammatic,
    sprime_formula,
)
from sl21.repmod import Morphism, Weight, dual_module, eps_module, generic_weights, tensor_module, typical_module, unit_module
from sl21.ribbon import braiding, coev_left, ev_right, pairing_scalar, twist
from sl21.scalar import Context, ScalarError, rel_diff

from conftest import MU, NU


def test_shifted_weight():
    a = ShiftedWeight.of(Context(3), MU)
    assert a == ShiftedWeight(MU.mu1 - 2, MU.mu2 + Fraction(3, 2))


@given(st.integers(0, 2**31))
@settings(max_examples=20, deadline=None)
def test_dimension_forms_and_symmetry(seed):
    ctx = Context(3)
    mu, mup = generic_weights(ctx, 2, np.random.default_rng(seed))
    assert rel_diff(modified_dim(ctx, mu), modified_dim_alpha(ctx, mu)) <= 1e-25
    lhs = modified_dim(ctx, mup) * sprime_formula(ctx, mu, mup)
    rhs = modified_dim(ctx, mu) * sprime_formula(ctx, mup, mu)
    assert rel_diff(lhs, rhs) <= 1e-25


def test_dimension_is_ell_periodic(ctx):
    assert rel_diff(modified_dim(ctx, MU), modified_dim(ctx, MU.shift(3, 0))) <= ctx.tol
    assert rel_diff(modified_dim(ctx, MU), modified_dim(ctx, MU.shift(0, -3))) <= ctx.tol


def test_singular_weights_raise(ctx):
    with pytest.raises(ScalarError):
        modified_dim(ctx, Weight(Fraction(1, 5), 0))
    with pytest.raises(ScalarError):
        sprime_formula(ctx, MU, Weight(2, Fraction(1, 7)))


@pytest.mark.parametrize("seed", range(3))
def test_sprime_diagrammatic_matches_formula(ctx, seed):
    mu, mup = generic_weights(ctx, 2, np.random.default_rng(100 + seed))
    sd = sprime_diagrammatic(typical_module(ctx, mu), typical_module(ctx, mup))
    assert rel_diff(sd, sprime_formula(ctx, mu, mup)) <= 1e-25


def test_sprime_special_circles(V, fast):
    assert rel_diff(sprime_diagrammatic(unit_module(fast), V), 1) < 1e-14
    for t in ((1, 0, 0), (2, -1, 1)):
        # closing the eps strand contributes its superdimension (-1)^p
        got = sprime_diagrammatic(eps_module(fast, t), V)
        assert rel_diff(got, (-1) ** t[2] * pairing_scalar(fast, V.gdegree, t)) < 1e-13


def test_meridian_scalar_is_sprime(V, W, fast):
    s = meridian_endo(W, V).scalar()
    assert rel_diff(s, sprime_formula(fast, MU, NU)) < 1e-13


def test_product_identity_and_double_ratio(ctx):
    assert sprime_product_identity(ctx, MU, NU) <= 1e-25
    nubar = NU.gdegree
    v, p = sprime_double_ratio(ctx, nubar, (1, 2), (0, 0), (2, 1), (0, 2))
    assert rel_diff(v, p) <= 1e-25


def test_mtrace_of_identity(V, fast):
    assert rel_diff(mtrace(Morphism.identity(V)), modified_dim(fast, MU)) < 1e-14
    assert rel_diff(module_modified_dim(dual_module(V)), module_modified_dim(V)) == 0
    E = eps_module(fast, (0, 0, 1))
    assert rel_diff(mtrace(Morphism.identity(tensor_module(V, E))), -modified_dim(fast, MU)) < 1e-14


def _endos(V, W):
    """A few intertwiners of V (x) W*."""
    VW = tensor_module(V, dual_module(W))
    out = [Morphism.identity(VW)]
    if V is W:
        out.append(coev_left(V) @ ev_right(V))
    out.append(meridian_endo(VW, typical_module(V.ctx, Weight(Fraction(2, 3), Fraction(1, 9)))))
    out.append(twist(VW))
    return out


def test_mtrace_cyclicity(V, W):
    a = _endos(V, V)
    f = a[1] + a[2] * 0.7
    g = a[3] + a[1] * (0.2 - 1j)
    assert rel_diff(mtrace(f @ g), mtrace(g @ f)) < 1e-12
    # across different objects: f = c_{V,W}, g = c_{W,V} o (theta_W (x) Id)
    c = braiding(V, W).morphism
    g2 = braiding(W, V).morphism @ twist(W).tensor(Morphism.identity(V))
    assert rel_diff(mtrace(g2 @ c), mtrace(c @ g2)) < 1e-12


def test_mtrace_partial_trace_property(V, W):
    # t_{V (x) W}(f (x) g) = t_V(f ptr(g)); with W = V* and g = twist the partial trace is theta qdim = 0
    f = twist(V)
    g = twist(W)
    assert abs(mtrace(f.tensor(g))) < 1e-12
    E = eps_module(V.ctx, (1, 1, 0))
    assert rel_diff(mtrace(f.tensor(Morphism.identity(E))), mtrace(f)) < 1e-13


def test_mtrace_errors(V, fast):
    E = eps_module(fast, (1, 0, 0))
    with pytest.raises(TraceError):
        mtrace(Morphism.identity(tensor_module(E, V)))
    with pytest.raises(TraceError):
        mtrace(Morphism.identity(E))
