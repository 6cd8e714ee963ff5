from __future__ import annotations

from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sl21.repmod import (
    GENERATORS,
    ROOTS,
    ModuleError,
    Morphism,
    MorphismError,
    Weight,
    check_algebra_relations,
    dual_module,
    e3_f3_actions,
    eps_module,
    generic_weights,
    in_singular_locus,
    is_typical,
    module_descriptor,
    module_from_descriptor,
    periodicity_isomorphism,
    tensor_all,
    tensor_module,
    typical_module,
    unit_module,
)
from sl21.scalar import Context

from conftest import MU


def idx(M, label):
    return M.labels.index(label)


def test_typical_dimension_and_parity(V):
    assert V.dim == 12
    for k, (r, s, p) in enumerate(V.labels):
        assert V.parity[k] == (r + s) % 2
        assert V.hweights[k] == (MU.mu1 + r - s - 2 * p, MU.mu2 + s + p)


def test_highest_weight_vector_killed_by_e(V):
    w0 = np.zeros(V.dim, dtype=complex)
    w0[idx(V, (0, 0, 0))] = 1
    for g in ("e1", "e2"):
        assert np.allclose(V.action(g).to_dense() @ w0, 0)


def test_relations_on_typical_high_precision(ctx):
    rep = check_algebra_relations(typical_module(ctx, MU))
    assert rep.passed(ctx.tol), rep.failures(ctx.tol)
    assert "serre_e" in rep.residuals and "e1_nilpotent" in rep.residuals


@given(st.integers(0, 2**31))
@settings(max_examples=20, deadline=None)
def test_relations_hold_on_random_modules(seed):
    ctx = Context.fast(3)
    rng = np.random.default_rng(seed)
    a, b = generic_weights(ctx, 2, rng)
    for M in (typical_module(ctx, a), dual_module(typical_module(ctx, a)),
              tensor_module(typical_module(ctx, a), typical_module(ctx, b))):
        assert check_algebra_relations(M).passed(1e-9)


def test_corrupted_f1_is_detected():
    ctx = Context(3, corrupt="f1")
    rep = check_algebra_relations(typical_module(ctx, MU))
    assert not rep.passed(1e-6)


def test_unit_and_eps_pass_relations(fast):
    for M in (unit_module(fast), eps_module(fast, (1, -2, 1))):
        assert check_algebra_relations(M).max_residual == 0


def test_is_typical_examples():
    ctx = Context(3)
    assert not is_typical(ctx, Weight(0, 0))
    assert is_typical(ctx, Weight(Fraction(1, 5), Fraction(1, 7)))
    assert not is_typical(ctx, Weight(Fraction(-1, 2), Fraction(-1, 2)))
    assert not is_typical(ctx, Weight(Fraction(3, 2), Fraction(1, 5)))  # mu1 in p - 1 + (ell/2)Z, p = 1
    assert is_typical(ctx, Weight(Fraction(1, 2), Fraction(1, 5)))
    with pytest.raises(ModuleError):
        typical_module(ctx, Weight(0, 0))


def test_singular_locus_examples():
    assert in_singular_locus((0, Fraction(3, 7)))
    assert not in_singular_locus((Fraction(1, 5), Fraction(1, 7)))
    assert in_singular_locus((Fraction(1, 4), Fraction(1, 4)))
    assert in_singular_locus((Fraction(1, 2), Fraction(1, 3)))


def test_eps_modules(fast):
    E = eps_module(fast, (0, 0, 0))
    assert E == unit_module(fast)
    Et = eps_module(fast, (1, 2, 1))
    assert Et.dim == 1 and Et.gdegree == (0, 0) and Et.parity[0] == 1
    assert Et.hweights[0] == (3, 6)
    a, b = eps_module(fast, (1, 0, 1)), eps_module(fast, (-2, 3, 1))
    ab, c = tensor_module(a, b), eps_module(fast, (-1, 3, 0))
    assert ab.hweights == c.hweights and list(ab.parity % 2) == list(c.parity)


def test_dual_module(V, fast):
    Vd = dual_module(V)
    assert [(-a, -b) for a, b in V.hweights] == Vd.hweights
    assert list(Vd.parity) == list(V.parity)
    assert dual_module(unit_module(fast)) == unit_module(fast)
    assert check_algebra_relations(Vd).passed(1e-9)


def test_tensor_module(V, W, fast):
    VW = tensor_module(V, W)
    assert VW.dim == 144
    assert VW.gdegree == tuple((a + b) % 1 for a, b in zip(V.gdegree, W.gdegree))
    assert tensor_module(V, unit_module(fast)) is V
    assert tensor_module(unit_module(fast), V) is V
    assert check_algebra_relations(VW).passed(1e-9)


def test_tensor_is_left_normalized(V, W, X):
    a = tensor_module(V, tensor_module(W, X))
    b = tensor_module(tensor_module(V, W), X)
    assert a is b
    assert tensor_all(V.ctx, [V, W, X]) is a


def test_generators_shift_weights_by_roots(V, W):
    for M in (V, tensor_module(V, dual_module(W))):
        for g in GENERATORS:
            op = M.action(g)
            d = np.array(ROOTS[g]) * M.wden
            assert np.all(M.wnum[op.rows] - M.wnum[op.cols] == d)


def test_e3_f3(V):
    e3, f3 = e3_f3_actions(V)
    assert (e3 @ e3).fro_norm() < 1e-12 and (f3 @ f3).fro_norm() < 1e-12
    w0 = np.zeros(V.dim, dtype=complex)
    w0[idx(V, (0, 0, 0))] = 1
    out = f3.to_dense() @ w0
    target = np.zeros(V.dim)
    target[idx(V, (0, 1, 0))] = 1
    assert np.allclose(out, target)
    # odd operators connect opposite parities
    for op in (e3, f3):
        assert np.all(V.parity[op.rows] != V.parity[op.cols])


def test_periodicity(fast):
    V = typical_module(fast, MU)
    U = typical_module(fast, MU.shift(3, -6))
    assert V.gdegree == U.gdegree
    iso = periodicity_isomorphism(V, U)
    for g in GENERATORS:
        assert (iso @ V.action(g) - U.action(g) @ iso).fro_norm() < 1e-12
    for i in range(2):
        assert (iso @ V.k_op(i) - U.k_op(i) @ iso).fro_norm() < 1e-12
    with pytest.raises(ModuleError):
        periodicity_isomorphism(V, typical_module(fast, MU.shift(1, 0)))


def test_free_realization(V, fast):
    base = Counter(zip(map(tuple, V.hweights), V.parity.tolist()))
    for t in ((1, 0, 0), (0, 1, 0), (0, 0, 1), (2, -1, 1)):
        EV = tensor_module(eps_module(fast, t), V)
        other = Counter(zip(map(tuple, EV.hweights), EV.parity.tolist()))
        assert not (base & other)


def test_descriptor_roundtrip(V, W, fast):
    for M in (V, dual_module(V), tensor_module(V, dual_module(W)), eps_module(fast, (1, 2, 1)), unit_module(fast)):
        assert module_from_descriptor(fast, module_descriptor(M)) is M
    assert module_descriptor(V) == {"form": "typical", "mu": ["1/5", "1/7"]}
    with pytest.raises(ModuleError):
        module_from_descriptor(fast, {"form": "bogus"})
    with pytest.raises(ModuleError):
        module_from_descriptor(fast, {"mu": [1, 2]})


def test_generic_weights_are_reproducible(fast):
    a = generic_weights(fast, 5, np.random.default_rng(4))
    b = generic_weights(fast, 5, np.random.default_rng(4))
    assert a == b
    assert all(is_typical(fast, w) and not in_singular_locus(w.gdegree) for w in a)


def test_morphism_typing(V, W):
    I = Morphism.identity(V)
    with pytest.raises(MorphismError):
        I @ Morphism.identity(W)
    with pytest.raises(MorphismError):
        Morphism(V, W, V.identity().kron(W.identity()))
    assert I.scalar() == 1
    assert I.parity_violation() == 0 and I.weight_violation() == 0 and I.intertwiner_residual() == 0
    odd = Morphism(V, V, V.action("e2"))
    assert odd.parity_violation() > 0 and odd.weight_violation() > 0
    with pytest.raises(MorphismError):
        odd.scalar()


def test_morphism_json_roundtrip(V):
    f = Morphism(V, V, V.k_op(0))
    g = Morphism.from_json(V.ctx, f.to_json())
    assert g.dom is V and (g - f).norm() == 0


def test_tensor_and_dual_actions_are_lazy_and_correct(fast):
    from sl21.repmod import _dual_actions, _tensor_actions, dual_module, tensor_module, typical_module

    V = typical_module(fast, MU)
    W = typical_module(fast, Weight(Fraction(2, 3), Fraction(1, 9)))
    T = tensor_module(V, dual_module(W))
    assert T.actions == {}
    Wd = dual_module(W)
    expect_dual = _dual_actions(W)
    expect = _tensor_actions(V, Wd)
    for g in GENERATORS:
        assert (T.action(g) - expect[g]).max_abs() == 0
        assert (Wd.action(g) - expect_dual[g]).max_abs() == 0


def test_registry_is_bounded():
    from sl21.repmod import _Registry, typical_module

    ctx = Context.fast(3)
    reg = _Registry(budget=30)
    mods = [reg.get(ctx, ("probe", i), lambda i=i: typical_module(ctx, MU.shift(3 * i, 0))) for i in range(5)]
    assert all(m.dim == 12 for m in mods)
    assert reg._total <= 30 and len(reg._store) == 2
    # an evicted entry is rebuilt equal to the original
    again = reg.get(ctx, ("probe", 0), lambda: typical_module(ctx, MU))
    assert again == mods[0]
