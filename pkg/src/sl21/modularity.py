"""Kirby colours, anomaly scalars and the meridian morphisms ``f_ij``.

``f_ij`` is an endomorphism of ``V_i (x) V_j*``: a Kirby-coloured circle
``Omega = sum_k d(V_k) V_k`` around an upward ``V_i`` strand and a downward
``V_j`` strand.  Relative modularity states ``d(V_i) f_ij = delta_ij coev o ev``,
where ``coev o ev = coev_left(V_i) o ev_right(V_i)``.
"""

from __future__ import annotations

from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Any, Iterable

import numpy as np

from .mtrace import ShiftedWeight, TraceError, module_modified_dim, modified_dim, sprime_formula
from .repmod import (
    ModuleError,
    ModuleObject,
    Morphism,
    MorphismError,
    Weight,
    dual_module,
    eps_module,
    gdegree,
    in_singular_locus,
    tensor_module,
    typical_module,
    xi_vector,
)
from .report import Report
from .ribbon import _bform, _common, coev_left, e_part, ev_right, f_part, rterms, trace_weights
from .scalar import Context, ScalarError, fraction_str, rel_diff, xi_pow
from .sparse import SparseOp

B_FORM = ((0, -2), (-2, -4))


class DegreeError(ValueError):
    """A degree lies on the singular set or modules have the wrong degree."""


@dataclass(eq=False)
class KirbyColor:
    """``Omega = sum_k d(V_k) V_k`` over the ``ell^2`` shifts ``mu + (s1, s2)``."""

    ctx: Context
    degree: tuple[Fraction, Fraction]
    base: Weight
    parity: int
    terms: list[tuple[ModuleObject, Any]]

    def descriptor(self) -> dict:
        out = {"form": "kirby", "degree": [fraction_str(x) for x in self.degree]}
        if self.parity:
            out["parity"] = self.parity
        return out


def _check_degree(mubar: Iterable) -> tuple[Fraction, Fraction]:
    deg = gdegree(*mubar)
    if in_singular_locus(deg):
        raise DegreeError(f"degree ({deg[0]}, {deg[1]}) lies in the singular set X")
    return deg


def kirby_color(ctx: Context, mubar: Iterable, parity: int = 0) -> KirbyColor:
    """Kirby colour of degree ``mubar``; ``parity=1`` uses the parity-shifted representatives."""
    deg = _check_degree(mubar)
    base = Weight(*deg)
    odd = eps_module(ctx, (0, 0, 1))
    terms = []
    for s1 in range(ctx.ell):
        for s2 in range(ctx.ell):
            V = typical_module(ctx, base.shift(s1, s2))
            if parity % 2:
                V = tensor_module(V, odd)
            terms.append((V, module_modified_dim(V)))
    return KirbyColor(ctx, deg, base, parity % 2, terms)


# ---------------------------------------------------------------------------
# meridians


def meridian_endo(W: ModuleObject, V: ModuleObject) -> Morphism:
    """``ptr_R`` over ``V`` of ``c_{V,W} o c_{W,V}`` on ``W (x) V``, by term-wise contraction.

    With ``Rcheck = sum_t coef_t E_t (x) F_t`` the result is

        sum_{s,t: shift_s = shift_t} coef_s coef_t F_s^W E_t^W diag(D_st),
        D_st(w) = xi^(B(d,d) + B(a_w,d)) sum_v xi^(-2B(a_w,b_v) - B(b_v,d)) (-1)^|v| g_v (E_s^V F_t^V)[v,v]

    where ``d`` is the common shift and ``a, b`` are the weights on ``W`` and ``V``.
    """
    ctx = W.ctx
    a, b, den = _common(W, V)
    dd = den * den
    G = xi_vector(ctx, -2 * _bform(a[:, None, :], b[None, :, :]).ravel(), dd).reshape(W.dim, V.dim)
    tw = trace_weights(V)
    groups: dict[tuple, list] = defaultdict(list)
    for t in rterms(ctx):
        groups[t.shift].append(t)
    total = SparseOp.zeros((W.dim, W.dim), ctx.dtype)
    for shift, terms in groups.items():
        d = np.array(shift, dtype=np.int64) * den
        colphase = xi_vector(ctx, -_bform(b, d), dd)
        rowphase = xi_vector(ctx, _bform(a, d) + int(_bform(d, d)), dd)
        for s in terms:
            Es = e_part(V, s)
            if Es.nnz == 0 or f_part(W, s).nnz == 0:
                continue
            for t in terms:
                Ft = f_part(V, t)
                if Ft.nnz == 0 or e_part(W, t).nnz == 0:
                    continue
                diag = (Es @ Ft).diagonal()
                if not any(x != 0 for x in diag):
                    continue
                vec = rowphase * G.dot(diag * tw * colphase)
                Wop = f_part(W, s) @ e_part(W, t)
                total = total + Wop.scale_cols(vec) * (s.coef * t.coef)
    return Morphism(W, W, total)


def meridian_endo_bruteforce(W: ModuleObject, V: ModuleObject) -> Morphism:
    """Same as :func:`meridian_endo` with the double braiding formed explicitly."""
    from .ribbon import braiding, ptr_right

    dbl = braiding(V, W).morphism @ braiding(W, V).morphism
    return ptr_right(dbl, V)


def _meridian_job(args: tuple) -> SparseOp:
    W, V = args
    W.ctx.activate()
    return meridian_endo(W, V).op


def kirby_meridian(W: ModuleObject, omega: KirbyColor, jobs: int = 1) -> tuple[Morphism, float]:
    """``sum_k d_k meridian(W, V_k)`` and the scale ``sum_k |d_k| ||meridian_k||``.

    Terms are reduced in Kirby order, so the result does not depend on ``jobs``.
    """
    ctx = W.ctx
    mods = [V for V, _ in omega.terms]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            ops = list(pool.map(_meridian_job, [(W, V) for V in mods]))
    else:
        ops = [meridian_endo(W, V).op for V in mods]
    total = SparseOp.zeros((W.dim, W.dim), ctx.dtype)
    scale = 0.0
    for (V, dk), op in zip(omega.terms, ops):
        total = total + op * dk
        scale += float(abs(dk)) * op.fro_norm()
    return Morphism(W, W, total), scale


# ---------------------------------------------------------------------------
# f_ij


def _typical_degree(V: ModuleObject) -> tuple[Fraction, Fraction]:
    if V.form != "typical":
        raise DegreeError(f"{V!r} is not a typical module")
    return V.gdegree


def f_ij(ctx: Context, mubar: Iterable, Vi: ModuleObject, Vj: ModuleObject, jobs: int = 1,
         with_scale: bool = False) -> Any:
    """The meridian morphism ``f_ij^{mubar}`` on ``Vi (x) Vj*``."""
    omega = kirby_color(ctx, _check_degree(mubar))
    di, dj = _typical_degree(Vi), _typical_degree(Vj)
    if di != dj:
        raise DegreeError(f"V_i and V_j have different degrees {di} and {dj}")
    _check_degree(di)
    W = tensor_module(Vi, dual_module(Vj))
    f, scale = kirby_meridian(W, omega, jobs)
    return (f, scale) if with_scale else f


def coev_ev(Vi: ModuleObject) -> Morphism:
    """``coev_left(V_i) o ev_right(V_i)`` on ``V_i (x) V_i*``."""
    return coev_left(Vi) @ ev_right(Vi)


def zeta_estimate(f: Morphism, target: Morphism) -> Any:
    """Least-squares ``z`` with ``f ~ z target``."""
    num = target.ctx.zero
    den = target.ctx.zero
    tf = dict(zip(zip(f.op.rows.tolist(), f.op.cols.tolist()), f.op.vals))
    for r, c, v in zip(target.op.rows.tolist(), target.op.cols.tolist(), target.op.vals):
        num = num + v.conjugate() * tf.get((r, c), 0)
        den = den + v.conjugate() * v
    return num / den


def invariance_residual(Vi: ModuleObject, f: Morphism) -> float:
    """Max norm of ``x f`` (x = e1, e2, f1, f2) and ``(k_i - 1) f`` relative to ``max(1, ||f||)``."""
    W = f.cod
    scale = max(1.0, f.norm())
    worst = 0.0
    for g in ("e1", "e2", "f1", "f2"):
        worst = max(worst, (W.action(g) @ f.op).fro_norm())
    for i in range(2):
        worst = max(worst, ((W.k_op(i) - W.identity()) @ f.op).fro_norm())
    return worst / scale


# ---------------------------------------------------------------------------
# anomaly scalars


def delta_pm(ctx: Context, mubar: Iterable, V: ModuleObject) -> tuple[Any, Any]:
    """``(Delta_+, Delta_-)`` for the probe ``V``, which must have degree ``mubar``.

    ``Delta_-``: Kirby circle with a negative twist and positive crossings, plus a
    negative kink on the strand.  ``Delta_+`` is the mirror image.
    """
    from .tangle import delta_diagram, evaluate

    deg = _check_degree(mubar)
    if V.form != "typical":
        raise DegreeError("the probe must be a typical module")
    if V.gdegree != deg:
        raise DegreeError(f"probe degree {V.gdegree} differs from the Kirby degree {deg}")
    omega = kirby_color(ctx, deg)
    plus = evaluate(delta_diagram(V, omega, +1)).scalar()
    minus = evaluate(delta_diagram(V, omega, -1)).scalar()
    return plus, minus


# ---------------------------------------------------------------------------
# bilinear form


def bform_nondegenerate(ell: int) -> bool:
    """``B = [[0,-2],[-2,-4]]`` is invertible mod ``ell`` and separates ``(Z/ell)^2``."""
    det = B_FORM[0][0] * B_FORM[1][1] - B_FORM[0][1] * B_FORM[1][0]
    if gcd(abs(det), ell) != 1:
        return False
    # every nonzero x has some y with B(x, y) != 0 mod ell
    for x1 in range(ell):
        for x2 in range(ell):
            if (x1, x2) == (0, 0):
                continue
            if all((x1 * (B_FORM[0][0] * y1 + B_FORM[0][1] * y2) + x2 * (B_FORM[1][0] * y1 + B_FORM[1][1] * y2)) % ell == 0
                   for y1 in range(ell) for y2 in range(ell)):
                return False
    return True


# ---------------------------------------------------------------------------
# end-to-end certification


def verify_relative_modularity(ctx: Context, mubar: Iterable, nubar: Iterable, n_pairs: int = 5,
                               n_diag: int = 3, rng: np.random.Generator | None = None, jobs: int = 1,
                               tol: float = 1e-12) -> Report:
    """Off-diagonal vanishing, diagonal identity, zeta, invariance, handle slides and Delta.

    If a step cannot be evaluated (for instance a meridian that is not scalar),
    the checks recorded so far are kept and ``evaluation_completed`` fails.
    """
    rng = np.random.default_rng(ctx.seed) if rng is None else rng
    mubar, nubar = _check_degree(mubar), _check_degree(nubar)
    rep = Report("relative_modularity", meta={"ell": ctx.ell, "mubar": [fraction_str(x) for x in mubar],
                                              "nubar": [fraction_str(x) for x in nubar]})
    try:
        _relative_modularity_checks(rep, ctx, mubar, nubar, n_pairs, n_diag, rng, jobs, tol)
    except (MorphismError, TraceError, ScalarError) as exc:
        rep.check_completed(exc)
    return rep


def _relative_modularity_checks(rep: Report, ctx: Context, mubar, nubar, n_pairs: int, n_diag: int,
                                rng: np.random.Generator, jobs: int, tol: float) -> None:
    base = Weight(*nubar)
    shifts = [(a, b) for a in range(ctx.ell) for b in range(ctx.ell)]

    off = []
    for _ in range(n_pairs):
        i, j = rng.choice(len(shifts), size=2, replace=False)
        Vi = typical_module(ctx, base.shift(*shifts[i]))
        Vj = typical_module(ctx, base.shift(*shifts[j]))
        f, scale = f_ij(ctx, mubar, Vi, Vj, jobs=jobs, with_scale=True)
        off.append(f.norm() / max(1.0, scale))
    rep.check_le("offdiagonal_max_scaled_norm", max(off), tol, f"{n_pairs} pairs of distinct orbits")

    diag_res, zetas, inv_res, shift_res = [], [], [], []
    diag_idx = rng.choice(len(shifts), size=n_diag, replace=False)
    shifted_deg = (mubar[0] + nubar[0], mubar[1] + nubar[1])
    shifted_ok = not in_singular_locus(shifted_deg)
    for i in diag_idx:
        Vi = typical_module(ctx, base.shift(*shifts[i]))
        f = f_ij(ctx, mubar, Vi, Vi, jobs=jobs)
        target = coev_ev(Vi)
        d = module_modified_dim(Vi)
        diag_res.append((f * d - target).norm() / max(1.0, target.norm()))
        zetas.append(zeta_estimate(f * d, target))
        inv_res.append(invariance_residual(Vi, f))
        if shifted_ok:
            f2 = f_ij(ctx, shifted_deg, Vi, Vi, jobs=jobs)
            shift_res.append((f - f2).norm() / max(1.0, f.norm()))
    slide_res = []
    if shifted_ok:
        for _ in range(n_pairs):
            i, j = rng.choice(len(shifts), size=2, replace=True)
            Vi = typical_module(ctx, base.shift(*shifts[i]))
            Vj = typical_module(ctx, base.shift(*shifts[j]))
            slide_res.append(handle_slide_residual(ctx, mubar, nubar, Vi, Vj, rng, jobs))
    rep.check_le("diagonal_max_residual", max(diag_res), tol, "||d(V_i) f_ii - coev o ev|| / ||coev o ev||")
    zeta_err = max(rel_diff(z, 1) for z in zetas)
    rep.check_le("zeta_minus_one", zeta_err, tol, "zeta = " + ", ".join(f"{complex(z):.15g}" for z in zetas))
    rep.check_le("image_invariant_vectors", max(inv_res), tol, "image of f_ii killed by e_i, f_i and fixed by k_i")
    if shift_res:
        rep.check_le("degree_shift_invariance", max(shift_res), tol, "f_ii at mubar vs mubar + nubar")
    if slide_res:
        rep.check_le("handle_slide_max_residual", max(slide_res), tol, f"{len(slide_res)} spot checks")
    plus, minus = delta_pm(ctx, mubar, typical_module(ctx, Weight(*mubar)))
    rep.check_le("delta_plus_minus_one", rel_diff(plus, 1), tol, f"Delta_+ = {complex(plus):.15g}")
    rep.check_le("delta_minus_minus_one", rel_diff(minus, 1), tol, f"Delta_- = {complex(minus):.15g}")
    rep.check_true("bform_nondegenerate", bform_nondegenerate(ctx.ell), "det = -4, gcd(4, ell) = 1")


def handle_slide_residual(ctx: Context, mubar, nubar, Vi: ModuleObject, Vj: ModuleObject,
                          rng: np.random.Generator, jobs: int = 1) -> float:
    """Scaled gap in ``S'(V_k, V_i) f_ij^{mubar} = S'(V_k, V_j) f_ij^{mubar+nubar}``.

    ``V_k`` is a random typical module of degree ``nubar`` and ``S'(V_k, X)`` is
    the scalar of a ``V_k`` meridian around an upward ``X`` strand.
    """
    k = tuple(int(x) for x in rng.integers(0, ctx.ell, size=2))
    Vk = typical_module(ctx, Weight(*nubar).shift(*k))
    si = meridian_endo(Vi, Vk).scalar()
    sj = meridian_endo(Vj, Vk).scalar()
    shifted = (mubar[0] + nubar[0], mubar[1] + nubar[1])
    f, sc1 = f_ij(ctx, mubar, Vi, Vj, jobs=jobs, with_scale=True)
    g, sc2 = f_ij(ctx, shifted, Vi, Vj, jobs=jobs, with_scale=True)
    scale = max(1.0, float(abs(si)) * sc1, float(abs(sj)) * sc2)
    return (f * si - g * sj).norm() / scale


def sprime_product_identity(ctx: Context, mu_k: Any, mu_i: Any) -> float:
    """Relative gap in ``S'(V_k, V_i) = xi^(-4 a2 b2 - 2 (a2 b1 + a1 b2)) / (ell d(V_i))``.

    ``a`` and ``b`` are the shifted weights of ``V_k`` and ``V_i``.
    """
    a, b = ShiftedWeight.of(ctx, mu_k), ShiftedWeight.of(ctx, mu_i)
    phase = xi_pow(ctx, -4 * a.alpha2 * b.alpha2 - 2 * (a.alpha2 * b.alpha1 + a.alpha1 * b.alpha2))
    lhs = sprime_formula(ctx, mu_k, mu_i)
    return rel_diff(lhs, phase / (ctx.num(ctx.ell) * modified_dim(ctx, mu_i)))


def sprime_double_ratio(ctx: Context, nubar: Iterable, i: tuple, j: tuple, k1: tuple, k2: tuple) -> tuple[Any, Any]:
    """``S'(k1,i)/S'(k1,j) * S'(k2,j)/S'(k2,i)`` and its prediction ``xi^B(i-j, k1-k2)``.

    All four weights are ``nubar`` shifted by the given integer pairs.
    """
    base = Weight(*gdegree(*nubar))
    w = {n: base.shift(*v) for n, v in (("i", i), ("j", j), ("k1", k1), ("k2", k2))}
    S = lambda k, x: sprime_formula(ctx, w[k], w[x])  # noqa: E731
    value = S("k1", "i") / S("k1", "j") * S("k2", "j") / S("k2", "i")
    x = (i[0] - j[0], i[1] - j[1])
    y = (k1[0] - k2[0], k1[1] - k2[1])
    expo = sum(B_FORM[r][c] * x[r] * y[c] for r in range(2) for c in range(2))
    return value, xi_pow(ctx, expo)


__all__ = [
    "KirbyColor", "DegreeError", "kirby_color", "meridian_endo", "meridian_endo_bruteforce", "kirby_meridian",
    "f_ij", "coev_ev", "zeta_estimate", "invariance_residual", "delta_pm", "bform_nondegenerate",
    "verify_relative_modularity", "handle_slide_residual", "sprime_product_identity", "sprime_double_ratio",
    "ModuleError",
]
