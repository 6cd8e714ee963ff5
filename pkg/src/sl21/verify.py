"""Seeded property suites shared by the command line and the acceptance tests.

Each suite returns a :class:`~sl21.report.Report`.  The default threshold of a
suite is ``max(ctx.tol, floor)`` where ``floor`` is the suite's target accuracy
at 106 bits; an explicit ``tol`` overrides it.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

import numpy as np

from .modularity import (
    delta_pm,
    f_ij,
    kirby_color,
    kirby_meridian,
    verify_relative_modularity,
)
from .mtrace import TraceError, module_modified_dim, modified_dim, modified_dim_alpha, sprime_diagrammatic, sprime_formula
from .repmod import (
    GENERATORS,
    Morphism,
    MorphismError,
    Weight,
    check_algebra_relations,
    dual_module,
    eps_module,
    generic_weights,
    is_typical,
    tensor_module,
    typical_module,
)
from .report import Report
from .ribbon import (
    braiding,
    braiding_inv,
    coev_left,
    coev_right,
    double_braiding,
    dual_morphism,
    ev_left,
    ev_right,
    pairing_scalar,
    qdim,
    twist,
    twist_bruteforce,
)
from .scalar import Context, ScalarError, fraction_str, rel_diff
from .tangle import (
    connected_sum_hopf_diagram,
    double_meridian_diagram,
    evaluate,
    evaluate_renormalized,
    hopf_diagram,
    omega_double_meridian_graph,
    unknot_diagram,
)

FLOORS = {"relations": 1e-20, "ribbon": 1e-18, "trace": 1e-15, "premodular": 1e-12, "modular": 1e-12}


def _threshold(ctx: Context, suite: str, tol: float | None) -> float:
    return tol if tol is not None else max(ctx.tol, FLOORS[suite])


def _rng(ctx: Context, rng: np.random.Generator | None) -> np.random.Generator:
    return np.random.default_rng(ctx.seed) if rng is None else rng


def _meta(ctx: Context, thr: float) -> dict:
    return {"ell": ctx.ell, "precision": ctx.precision, "seed": ctx.seed, "threshold": thr}


def generic_degrees(ctx: Context, n: int, rng: np.random.Generator) -> list[tuple[Fraction, Fraction]]:
    """Seeded generic G-degrees off the singular set."""
    return [w.gdegree for w in generic_weights(ctx, n, rng)]


# ---------------------------------------------------------------------------


def relations_suite(ctx: Context, n_weights: int = 20, rng: np.random.Generator | None = None,
                    tol: float | None = None) -> Report:
    """Defining relations on typical modules, their duals and pairwise tensors."""
    rng = _rng(ctx, rng)
    thr = _threshold(ctx, "relations", tol)
    rep = Report("relations", meta=_meta(ctx, thr))
    weights = generic_weights(ctx, n_weights, rng)
    mods = [typical_module(ctx, w) for w in weights]
    cases = []
    for k, V in enumerate(mods):
        cases.append(("typical", V))
        cases.append(("dual", dual_module(V)))
        W = mods[(k + 1) % len(mods)]
        cases.append(("tensor", tensor_module(V, W)))
        if k % 4 == 0:
            cases.append(("tensor_dual", tensor_module(V, dual_module(W))))
    worst: dict[str, tuple[float, str]] = {}
    for kind, M in cases:
        r = check_algebra_relations(M)
        for name, val in r.residuals.items():
            if name not in worst or val > worst[name][0]:
                worst[name] = (val, r.module)
    for name in sorted(worst):
        val, where = worst[name]
        rep.check_le(f"relation_{name}", val, thr, f"worst on {where}")
    rep.meta["modules_checked"] = len(cases)
    return rep


def ribbon_suite(ctx: Context, n_weights: int = 3, rng: np.random.Generator | None = None,
                 tol: float | None = None) -> Report:
    """Dualities, braiding naturality and hexagons, twist and the eps family."""
    rng = _rng(ctx, rng)
    thr = _threshold(ctx, "ribbon", tol)
    rep = Report("ribbon", meta=_meta(ctx, thr))
    U, V, W = (typical_module(ctx, w) for w in generic_weights(ctx, max(3, n_weights), rng)[:3])
    I = Morphism.identity

    zz = []
    for M in (V, dual_module(V)):
        Md = dual_module(M)
        zz.append(((I(M).tensor(ev_left(M))) @ (coev_left(M).tensor(I(M))) - I(M)).norm())
        zz.append(((ev_left(M).tensor(I(Md))) @ (I(Md).tensor(coev_left(M))) - I(Md)).norm())
        zz.append(((ev_right(M).tensor(I(M))) @ (I(M).tensor(coev_right(M))) - I(M)).norm())
        zz.append(((I(Md).tensor(ev_right(M))) @ (coev_right(M).tensor(I(Md))) - I(Md)).norm())
    rep.check_le("zigzag_max", max(zz), thr, "four zig-zag identities on V and V*")

    nat, inv = [], []
    for A, B in ((U, V), (V, dual_module(W)), (U, eps_module(ctx, (1, -1, 1)))):
        c = braiding(A, B).morphism
        AB, BA = tensor_module(A, B), tensor_module(B, A)
        scale = max(1.0, c.norm())
        nat.append(max((c.op @ AB.action(g) - BA.action(g) @ c.op).fro_norm() for g in GENERATORS) / scale)
        for i in range(2):
            nat.append((c.op @ AB.k_op(i) - BA.k_op(i) @ c.op).fro_norm() / scale)
        inv.append((braiding_inv(A, B) @ c - I(AB)).norm())
    rep.check_le("braiding_naturality", max(nat), thr, "c o Delta(x) = Delta^op(x) o c")
    rep.check_le("braiding_inverse", max(inv), thr)

    # hexagons: c_{U,V(x)W} = (Id_V (x) c_{U,W})(c_{U,V} (x) Id_W) and
    #           c_{U(x)V,W} = (c_{U,W} (x) Id_V)(Id_U (x) c_{V,W})
    h1 = braiding(U, tensor_module(V, W)).morphism
    r1 = (I(V).tensor(braiding(U, W).morphism)) @ (braiding(U, V).morphism.tensor(I(W)))
    h2 = braiding(tensor_module(U, V), W).morphism
    r2 = (braiding(U, W).morphism.tensor(I(V))) @ (I(U).tensor(braiding(V, W).morphism))
    rep.check_le("hexagon_max", max((h1 - r1).norm() / max(1.0, h1.norm()),
                                    (h2 - r2).norm() / max(1.0, h2.norm())), thr, "both hexagons on U, V, W")

    th_v, th_w = twist(V), twist(W)
    rep.check_le("twist_vs_bruteforce", (th_v - twist_bruteforce(V)).norm(), thr)
    VW = tensor_module(V, W)
    lhs = twist(VW)
    rhs = double_braiding(V, W) @ th_v.tensor(th_w)
    rep.check_le("twist_tensor_compatibility", (lhs - rhs).norm() / max(1.0, lhs.norm()), thr,
                 "theta_{V(x)W} = c o c o (theta (x) theta)")
    rep.check_le("twist_dual_compatibility", (dual_morphism(th_v).op - twist(dual_module(V)).op).fro_norm(), thr,
                 "theta_{V*} = (theta_V)*")
    nat_t = max((th_v.op @ V.action(g) - V.action(g) @ th_v.op).fro_norm() for g in GENERATORS)
    rep.check_le("twist_naturality", nat_t, thr)

    eps_ts = [(1, 0, 0), (0, 1, 1), (-2, 3, 1)]
    comm, teps = [], []
    for s in eps_ts:
        Es = eps_module(ctx, s)
        teps.append((twist(Es) - I(Es)).norm())
        for t in eps_ts:
            Et = eps_module(ctx, t)
            comm.append((double_braiding(Es, Et) - I(tensor_module(Es, Et))).norm())
    rep.check_le("eps_commutativity", max(comm), thr, "c_{eps^t,eps^s} c_{eps^s,eps^t} = Id")
    rep.check_le("eps_twist_identity", max(teps), thr, "theta_eps = Id")
    pair = []
    for M in (V, dual_module(W)):
        deg = M.gdegree
        for t in eps_ts:
            Et = eps_module(ctx, t)
            dbl = braiding(Et, M).morphism @ braiding(M, Et).morphism
            pair.append((dbl - I(tensor_module(M, Et)) * pairing_scalar(ctx, deg, t)).norm())
    rep.check_le("eps_pairing", max(pair), thr, "c_{V,eps^t} c_{eps^t,V} = g^{.t} Id")
    return rep


def trace_suite(ctx: Context, n_pairs: int = 10, rng: np.random.Generator | None = None,
                tol: float | None = None) -> Report:
    """Modified dimension, S' cross-validation, F' cut independence and multiplicativity."""
    rng = _rng(ctx, rng)
    thr = _threshold(ctx, "trace", tol)
    rep = Report("trace", meta=_meta(ctx, thr))
    weights = generic_weights(ctx, n_pairs + 1, rng)
    mods = [typical_module(ctx, w) for w in weights]

    rep.check_le("dimension_forms_agree", max(rel_diff(modified_dim(ctx, w), modified_dim_alpha(ctx, w))
                                                for w in weights), thr, "d in mu- and alpha-variables")
    diffs, sym, ratios = [], [], []
    for k in range(n_pairs):
        mu, mup = weights[k], weights[k + 1]
        V, W = mods[k], mods[k + 1]
        sd = sprime_diagrammatic(V, W)
        sf = sprime_formula(ctx, mu, mup)
        diffs.append(rel_diff(sd, sf))
        ratios.append(sd / sf)
        sym.append(rel_diff(modified_dim(ctx, mup) * sprime_formula(ctx, mu, mup),
                            modified_dim(ctx, mu) * sprime_formula(ctx, mup, mu)))
    rep.check_le("sprime_diagrammatic_vs_formula", max(diffs), thr, f"{n_pairs} generic pairs")
    spread = max(rel_diff(r, ratios[0]) for r in ratios)
    rep.check_le("sprime_normalization_constant_spread", spread, thr,
                 f"ratio diagrammatic/formula = {complex(ratios[0]):.15g}")
    rep.check_le("sprime_symmetry", max(sym), thr, "d(mu') S'(mu, mu') = d(mu) S'(mu', mu)")

    V, W, X = mods[0], mods[1], mods[2]
    rep.check_le("qdim_typical_zero", float(abs(qdim(V))), thr)
    u = evaluate_renormalized(unknot_diagram(V), (1, 0))
    rep.check_le("unknot_equals_d", rel_diff(u, module_modified_dim(V)), thr)
    H = hopf_diagram(V, W)
    a, b = evaluate_renormalized(H, (1, 0)), evaluate_renormalized(H, (2, 1))
    ref = module_modified_dim(W) * sprime_formula(ctx, weights[0], weights[1])
    rep.check_le("hopf_cut_independence", rel_diff(a, b), thr)
    rep.check_le("hopf_equals_d_sprime", rel_diff(a, ref), thr, "F'(Hopf(V, W)) = d(W) S'(V, W)")
    C = connected_sum_hopf_diagram(V, W, X)
    c1 = evaluate_renormalized(C, (1, 0))
    c2 = evaluate_renormalized(C, (3, 1))
    h1 = evaluate_renormalized(hopf_diagram(W, V), (1, 0))
    h2 = evaluate_renormalized(hopf_diagram(X, V), (1, 0))
    rep.check_le("connected_sum_cut_independence", rel_diff(c1, c2), thr)
    rep.check_le("connected_sum_multiplicativity", rel_diff(c1, h1 * h2 / module_modified_dim(V)), thr,
                 "F'(L1 #_V L2) = d(V)^-1 F'(L1) F'(L2)")
    return rep


def premodular_suite(ctx: Context, rng: np.random.Generator | None = None, tol: float | None = None) -> Report:
    """Anomaly scalars, Kirby colours and the free realization."""
    rng = _rng(ctx, rng)
    thr = _threshold(ctx, "premodular", tol)
    rep = Report("premodular", meta=_meta(ctx, thr))
    degrees = generic_degrees(ctx, 2, rng)
    rep.meta["degrees"] = [[fraction_str(x) for x in d] for d in degrees]
    dev, typ = [], True
    for deg in degrees:
        omega = kirby_color(ctx, deg)
        typ = typ and all(is_typical(ctx, Weight(V.key[1], V.key[2])) for V, _ in omega.terms)
        # two distinct probes of the Kirby degree
        other = 1 + int(rng.integers(0, ctx.ell * ctx.ell - 1))
        for shift in ((0, 0), divmod(other, ctx.ell)):
            probe = typical_module(ctx, Weight(*deg).shift(*shift))
            plus, minus = delta_pm(ctx, deg, probe)
            dev += [rel_diff(plus, 1), rel_diff(minus, 1)]
            rep.items.append(_value_item(f"delta_pm_degree_{len(dev) // 2}", plus, minus))
    rep.check_le("delta_pm_minus_one_max", max(dev), thr, "Delta_+ = Delta_- = 1 over degrees and probes")
    rep.check_true("kirby_terms_typical", typ)
    # transparency of eps on every simple: double braiding is the pairing scalar
    V = typical_module(ctx, Weight(*degrees[0]))
    Et = eps_module(ctx, (1, 2, 1))
    dbl = double_braiding(V, Et)
    res = (dbl - Morphism.identity(tensor_module(V, Et)) * pairing_scalar(ctx, V.gdegree, (1, 2, 1))).norm()
    rep.check_le("eps_transparent_pairing", res, thr)
    # free action: eps^t (x) V has a different degree class or parity for t != 0
    W = tensor_module(V, eps_module(ctx, (0, 0, 1)))
    rep.check_true("eps_free_action", bool(np.all(W.parity != V.parity)))
    return rep


def _value_item(name: str, plus, minus):
    from .report import CheckItem

    return CheckItem(name, [complex(plus), complex(minus)], None, True, "Delta_+, Delta_-")


def modular_suite(ctx: Context, rng: np.random.Generator | None = None, tol: float | None = None,
                  n_pairs: int = 5, n_diag: int = 3, jobs: int = 1) -> Report:
    """Relative modularity, the Omega double-meridian graph and f_ij cross-checks."""
    rng = _rng(ctx, rng)
    thr = _threshold(ctx, "modular", tol)
    mubar, nubar = generic_degrees(ctx, 2, rng)
    rep = verify_relative_modularity(ctx, mubar, nubar, n_pairs=n_pairs, n_diag=n_diag, rng=rng, jobs=jobs,
                                     tol=thr)
    rep.suite = "modular"
    rep.meta.update(_meta(ctx, thr))
    omega = kirby_color(ctx, mubar)
    Vi = typical_module(ctx, Weight(*nubar))
    val = evaluate_renormalized(omega_double_meridian_graph(Vi, omega), (1, 0))
    rep.check_le("omega_graph_minus_one", rel_diff(val, 1), thr, f"F' = {complex(val):.15g}")
    f = f_ij(ctx, mubar, Vi, Vi, jobs=jobs)
    g = evaluate(double_meridian_diagram(Vi, Vi, omega))
    rep.check_le("f_ii_sum_vs_diagram", (f - g).norm() / max(1.0, f.norm()), thr,
                 "Kirby sum of meridians against the evaluated graph")
    odd, _ = kirby_meridian(f.dom, kirby_color(ctx, mubar, parity=1), jobs)
    rep.check_le("odd_parity_kirby_insensitive", (odd - f).norm() / max(1.0, f.norm()), thr)
    return rep


SUITES: dict[str, Callable[..., Report]] = {
    "relations": relations_suite,
    "ribbon": ribbon_suite,
    "trace": trace_suite,
    "premodular": premodular_suite,
    "modular": modular_suite,
}


# structural breakdowns (e.g. a meridian that is no longer scalar) under a wrong convention
EVALUATION_ERRORS = (MorphismError, TraceError, ScalarError)


def run_suite(name: str, ctx: Context, jobs: int = 1, tol: float | None = None) -> Report:
    """Run a suite; a check that cannot be evaluated becomes a failed ``evaluation_completed`` item."""
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    try:
        if name == "modular":
            return modular_suite(ctx, tol=tol, jobs=jobs)
        return SUITES[name](ctx, tol=tol)
    except EVALUATION_ERRORS as exc:
        rep = Report(name, meta=_meta(ctx, _threshold(ctx, name, tol)))
        rep.check_completed(exc)
        return rep
