from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sl21.modularity import (
    DegreeError,
    bform_nondegenerate,
    coev_ev,
    delta_pm,
    f_ij,
    invariance_residual,
    kirby_color,
    meridian_endo,
    meridian_endo_bruteforce,
    verify_relative_modularity,
    zeta_estimate,
)
from sl21.mtrace import module_modified_dim, sprime_formula
from sl21.repmod import Morphism, Weight, dual_module, eps_module, is_typical, tensor_module, typical_module, unit_module
from sl21.ribbon import pairing_scalar
from sl21.scalar import Context, rel_diff
from sl21.tangle import evaluate, meridian_diagram

from conftest import MU, NU

MUBAR = (Fraction(1, 5), Fraction(2, 7))
NUBAR = (Fraction(2, 3), Fraction(1, 9))
TOL = 1e-10


def _hw(V):
    return Weight(*V.key[1:])


def _mod(ctx, shift, deg=NUBAR):
    return typical_module(ctx, Weight(*deg).shift(*shift))


def test_kirby_colour_terms(fast):
    K = kirby_color(fast, MUBAR)
    assert len(K.terms) == 9
    assert all(V.form == "typical" and is_typical(fast, _hw(V)) for V, _ in K.terms)
    assert all(V.gdegree == MUBAR for V, _ in K.terms)
    for V, d in K.terms:
        assert rel_diff(d, module_modified_dim(V)) == 0
    assert K.descriptor() == {"form": "kirby", "degree": ["1/5", "2/7"]}


def test_kirby_colour_representative_shift_permutes_terms(fast):
    a = {_hw(V) for V, _ in kirby_color(fast, MUBAR).terms}
    b = {_hw(V) for V, _ in kirby_color(fast, (MUBAR[0] + 1, MUBAR[1] - 2)).terms}
    # the same orbits, represented by weights that differ by ell-multiples
    red = lambda w: (w.mu1 % 3, w.mu2 % 3)  # noqa: E731
    assert {red(w) for w in a} == {red(w) for w in b}


def test_kirby_colour_rejects_singular_degree(fast):
    with pytest.raises(DegreeError):
        kirby_color(fast, (Fraction(1, 5), 0))
    with pytest.raises(DegreeError):
        kirby_color(fast, (Fraction(1, 2), Fraction(1, 2)))


def test_meridian_special_colours(V, fast):
    m = meridian_endo(V, unit_module(fast))
    assert (m.op - Morphism.identity(V).op).max_abs() < TOL
    t = (1, 2, 0)
    m = meridian_endo(V, eps_module(fast, t))
    assert rel_diff(m.scalar(), pairing_scalar(fast, V.gdegree, t)) < TOL


def test_meridian_fast_matches_bruteforce_and_diagram(V, W, fast):
    fast_m = meridian_endo(V, W)
    brute = meridian_endo_bruteforce(V, W)
    diag = evaluate(meridian_diagram(V, W))
    assert (fast_m.op - brute.op).max_abs() < TOL
    assert (fast_m.op - diag.op).max_abs() < TOL
    assert rel_diff(fast_m.scalar(), sprime_formula(fast, NU, MU)) < TOL


def test_meridian_on_tensor_product(V, W, fast):
    X = tensor_module(V, dual_module(W))
    C = _mod(fast, (1, 0))
    assert (meridian_endo(X, C).op - meridian_endo_bruteforce(X, C).op).max_abs() < TOL


def test_f_offdiagonal_vanishes(fast):
    f, scale = f_ij(fast, MUBAR, _mod(fast, (0, 0)), _mod(fast, (1, 2)), with_scale=True)
    assert f.norm() / max(1.0, scale) < TOL
    assert scale > 1.0


def test_f_diagonal_identity(fast):
    Vi = _mod(fast, (2, 1))
    f = f_ij(fast, MUBAR, Vi, Vi)
    target = coev_ev(Vi)
    lhs = f * module_modified_dim(Vi)
    assert (lhs - target).norm() / target.norm() < TOL
    assert rel_diff(zeta_estimate(lhs, target), 1) < TOL
    assert invariance_residual(Vi, f) < TOL
    # independent of the Kirby degree
    g = f_ij(fast, NUBAR, Vi, Vi)
    assert (f - g).norm() / f.norm() < TOL


def test_f_diagonal_identity_high_precision(ctx):
    Vi = _mod(ctx, (0, 1))
    f = f_ij(ctx, MUBAR, Vi, Vi)
    target = coev_ev(Vi)
    assert (f * module_modified_dim(Vi) - target).norm() / target.norm() < 1e-25


def test_f_degree_errors(fast):
    with pytest.raises(DegreeError):
        f_ij(fast, MUBAR, _mod(fast, (0, 0)), _mod(fast, (0, 0), MUBAR))
    with pytest.raises(DegreeError):
        f_ij(fast, MUBAR, eps_module(fast, (1, 0, 0)), eps_module(fast, (1, 0, 0)))
    with pytest.raises(DegreeError):
        f_ij(fast, (0, Fraction(1, 3)), _mod(fast, (0, 0)), _mod(fast, (0, 0)))


def test_odd_parity_kirby_colour_gives_same_f(fast):
    from sl21.modularity import kirby_meridian

    Vi = _mod(fast, (1, 1))
    W = tensor_module(Vi, dual_module(Vi))
    even, _ = kirby_meridian(W, kirby_color(fast, MUBAR))
    odd, _ = kirby_meridian(W, kirby_color(fast, MUBAR, parity=1))
    assert (even - odd).norm() / even.norm() < TOL


def test_jobs_do_not_change_result(fast):
    Vi, Vj = _mod(fast, (0, 0)), _mod(fast, (0, 0))
    a = f_ij(fast, MUBAR, Vi, Vj, jobs=1)
    b = f_ij(fast, MUBAR, Vi, Vj, jobs=2)
    assert (a.op - b.op).max_abs() == 0


def test_delta_pm(fast):
    plus, minus = delta_pm(fast, MUBAR, typical_module(fast, Weight(*MUBAR).shift(1, 0)))
    assert rel_diff(plus, 1) < TOL
    assert rel_diff(minus, 1) < TOL
    with pytest.raises(DegreeError):
        delta_pm(fast, MUBAR, typical_module(fast, Weight(*NUBAR)))
    with pytest.raises(DegreeError):
        delta_pm(fast, MUBAR, eps_module(fast, (0, 0, 0)))


@given(st.sampled_from([3, 5, 7, 9, 11, 13, 15, 21]))
def test_bform_nondegenerate_for_odd_ell(ell):
    assert bform_nondegenerate(ell)


def test_bform_degenerate_for_even_ell():
    assert not bform_nondegenerate(2)
    assert not bform_nondegenerate(4)


def test_verify_relative_modularity_report(fast):
    rep = verify_relative_modularity(fast, MUBAR, NUBAR, n_pairs=2, n_diag=1, rng=np.random.default_rng(1),
                                     tol=1e-9)
    assert rep.passed, rep.failures()
    names = {c.name for c in rep.items}
    assert {"offdiagonal_max_scaled_norm", "diagonal_max_residual", "zeta_minus_one",
            "handle_slide_max_residual", "bform_nondegenerate"} <= names


def test_verify_relative_modularity_detects_corruption():
    bad = Context(3, tol=1e-8, precision=53, corrupt="rmatrix")
    rep = verify_relative_modularity(bad, MUBAR, NUBAR, n_pairs=1, n_diag=1, rng=np.random.default_rng(1),
                                     tol=1e-9)
    assert not rep.passed
    assert any(c.name == "evaluation_completed" and not c.passed for c in rep.items)
