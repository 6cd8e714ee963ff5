"""Modified dimension, modified trace and the S'-pairing.

For a typical weight ``mu`` with shifted weight ``alpha = (mu1 - ell + 1, mu2 + ell/2)``::

    d(mu)      = {mu1 + 1} / (ell {ell mu1} {mu2} {mu1 + mu2 + 1})
    S'(mu, mu') = xi^(-4 a2 a2' - 2 (a2 a1' + a1 a2')) {ell a1'} {a2'} {a1' + a2'} / {a1'}

``S'(V, W)`` is the scalar by which a V-coloured circle around a W-coloured
strand acts on W.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .repmod import ModuleObject, Morphism, MorphismError, Weight, module_from_key
from .ribbon import ptr_right
from .scalar import Context, ScalarError, bracket, xi_pow


class TraceError(ValueError):
    """Modified trace requested outside its domain."""


@dataclass(frozen=True)
class ShiftedWeight:
    """``(alpha1, alpha2) = (mu1 - ell + 1, mu2 + ell/2)``."""

    alpha1: Fraction
    alpha2: Fraction

    @classmethod
    def of(cls, ctx: Context, mu: Any) -> "ShiftedWeight":
        mu = Weight.parse(mu)
        return cls(mu.mu1 - ctx.ell + 1, mu.mu2 + Fraction(ctx.ell, 2))


def _nonzero(ctx: Context, x: Any, what: str) -> Any:
    if abs(x) == 0 or float(abs(x)) < 1e-300:
        raise ScalarError(f"{what} vanishes: weight lies on the singular locus")
    return x


def modified_dim(ctx: Context, mu: Any) -> Any:
    """``d(mu)`` in the mu-variables."""
    mu = Weight.parse(mu)
    den = (ctx.num(ctx.ell) * _nonzero(ctx, bracket(ctx, ctx.ell * mu.mu1), "{ell mu1}")
           * _nonzero(ctx, bracket(ctx, mu.mu2), "{mu2}")
           * _nonzero(ctx, bracket(ctx, mu.mu1 + mu.mu2 + 1), "{mu1 + mu2 + 1}"))
    return bracket(ctx, mu.mu1 + 1) / den


def modified_dim_alpha(ctx: Context, mu: Any) -> Any:
    """``d(mu)`` in the alpha-variables: ``{a1} / (ell {ell a1} {a2} {a1 + a2})``."""
    a = ShiftedWeight.of(ctx, mu)
    den = (ctx.num(ctx.ell) * _nonzero(ctx, bracket(ctx, ctx.ell * a.alpha1), "{ell alpha1}")
           * _nonzero(ctx, bracket(ctx, a.alpha2), "{alpha2}")
           * _nonzero(ctx, bracket(ctx, a.alpha1 + a.alpha2), "{alpha1 + alpha2}"))
    return bracket(ctx, a.alpha1) / den


def sprime_formula(ctx: Context, mu: Any, mu_prime: Any) -> Any:
    """Closed form of ``S'(V_mu, V_mu')``: circle coloured ``mu`` around a ``mu'`` strand."""
    a = ShiftedWeight.of(ctx, mu)
    b = ShiftedWeight.of(ctx, mu_prime)
    phase = xi_pow(ctx, -4 * a.alpha2 * b.alpha2 - 2 * (a.alpha2 * b.alpha1 + a.alpha1 * b.alpha2))
    num = bracket(ctx, ctx.ell * b.alpha1) * bracket(ctx, b.alpha2) * bracket(ctx, b.alpha1 + b.alpha2)
    return phase * num / _nonzero(ctx, bracket(ctx, b.alpha1), "{alpha1'}")


def sprime_diagrammatic(V: ModuleObject, W: ModuleObject) -> Any:
    """``S'(V, W)`` from the evaluated Hopf-link partial closure."""
    from .tangle import evaluate, meridian_diagram

    return evaluate(meridian_diagram(W, V)).scalar()


def module_modified_dim(M: ModuleObject) -> Any:
    """``d`` of a typical module, its dual, or a tensor product with a typical leftmost factor."""
    if M.form == "tensor":
        return mtrace(Morphism.identity(M))
    if M.form == "typical":
        return modified_dim(M.ctx, Weight(M.key[1], M.key[2]))
    if M.form == "dual" and M.key[1][0] == "typical":
        return modified_dim(M.ctx, Weight(M.key[1][1], M.key[1][2]))
    raise TraceError(f"{M!r} is not a typical module")


def mtrace(f: Morphism) -> Any:
    """Modified trace of an endomorphism whose domain has a typical leftmost factor."""
    if f.dom != f.cod:
        raise TraceError("modified trace needs an endomorphism")
    g = f
    while g.dom.form == "tensor":
        g = ptr_right(g, module_from_key(g.ctx, g.dom.key[2]))
    try:
        d = module_modified_dim(g.dom)
    except TraceError:
        raise TraceError(f"leftmost factor of {f.dom!r} is not typical") from None
    try:
        return d * g.scalar()
    except MorphismError as exc:
        raise TraceError(f"partial trace is not scalar: {exc}") from exc
