"""Braided pivotal structure: R-matrix, braiding, pivot, dualities and twist.

The braiding is ``c_{M,N} = tau_s o Rcheck o K`` where

* ``K`` multiplies ``v (x) w`` by ``xi^-(a1 b2 + a2 b1 + 2 a2 b2)`` for weights ``a, b``;
* ``Rcheck = sum_i {1}^i/(i)_q! e1^i (x) f1^i . (1 - {1} e3 (x) f3)(1 - {1} e2 (x) f2)``
  with ``q = xi^-2``;
* ``tau_s(v (x) w) = (-1)^{|v||w|} w (x) v``.

Duality maps (``->`` marks the left duality, ``<-`` the right one)::

    ev_left   : M* (x) M -> I,   f (x) v  |-> f(v)
    coev_left : I -> M (x) M*,   1 |-> sum_i v_i (x) v^i
    ev_right  : M (x) M* -> I,   v (x) f  |-> (-1)^{|v||f|} f(g v)
    coev_right: I -> M* (x) M,   1 |-> sum_i (-1)^{|v_i|} v^i (x) g^-1 v_i

with the pivot ``g = k1^-ell k2^-2``.  The twist is ``theta = ptr_R(c_{M,M})``.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Any

import numpy as np

from .repmod import (
    ModuleObject,
    Morphism,
    MorphismError,
    _array,
    dual_module,
    e3_f3_actions,
    module_from_key,
    tensor_module,
    unit_module,
    xi_vector,
)
from .scalar import Context, as_fraction, bracket, qfactorial, xi_pow
from .sparse import SparseOp

# corner factors of Rcheck: name -> (e-side shift, parity)
CORNERS = {"1": ((0, 0), 0), "e3": ((1, -1), 1), "e2": ((-1, 0), 1), "e3e2": ((0, -1), 0)}

# LRU memo for R-matrix pieces, braidings and twists, bounded by stored nonzeros
CACHE_BUDGET = 2_000_000
_cache_lock = threading.Lock()
_cache: OrderedDict = OrderedDict()
_cache_weight = 0


def _weight(value: Any) -> int:
    """Stored nonzeros of a cached value."""
    if isinstance(value, SparseOp):
        return max(1, value.nnz)
    if isinstance(value, Morphism):
        return max(1, value.op.nnz)
    if isinstance(value, BraidingOperator):
        return sum(_weight(v) for v in (value.tau, value.rcheck, value.k, value.morphism))
    if isinstance(value, (list, tuple)):
        return max(1, len(value))
    return 1


def _memo(key: tuple, build):
    global _cache_weight
    with _cache_lock:
        hit = _cache.get(key)
        if hit is not None:
            _cache.move_to_end(key)
            return hit[0]
    value = build()
    w = _weight(value)
    if w > CACHE_BUDGET:
        return value
    with _cache_lock:
        if key in _cache:
            return _cache[key][0]
        _cache[key] = (value, w)
        _cache_weight += w
        while _cache_weight > CACHE_BUDGET:
            _, (_, old) = _cache.popitem(last=False)
            _cache_weight -= old
    return value


def clear_cache() -> None:
    global _cache_weight
    with _cache_lock:
        _cache.clear()
        _cache_weight = 0


# ---------------------------------------------------------------------------
# bilinear form on weights


def _common(M: ModuleObject, N: ModuleObject) -> tuple[np.ndarray, np.ndarray, int]:
    den = int(np.lcm(M.wden, N.wden))
    return M.wnum * (den // M.wden), N.wnum * (den // N.wden), den


def _bform(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a1 b2 + a2 b1 + 2 a2 b2`` for broadcastable integer arrays of shape (..., 2)."""
    return a[..., 0] * b[..., 1] + a[..., 1] * b[..., 0] + 2 * a[..., 1] * b[..., 1]


def k_operator(M: ModuleObject, N: ModuleObject) -> Morphism:
    """Diagonal ``K`` on ``M (x) N``."""
    a, b, den = _common(M, N)
    nums = -_bform(a[:, None, :], b[None, :, :]).ravel()
    vals = xi_vector(M.ctx, nums, den * den)
    MN = tensor_module(M, N)
    return Morphism(MN, MN, SparseOp.diag(vals, M.ctx.dtype))


# ---------------------------------------------------------------------------
# R-matrix terms


@dataclass(frozen=True)
class RTerm:
    """One summand ``coef * E (x) F`` of Rcheck, ``E`` raising weights by ``shift``."""

    i: int
    corner: str
    coef: Any
    shift: tuple[int, int]
    parity: int


def rterms(ctx: Context) -> list[RTerm]:
    """The ``4 ell`` summands of Rcheck as abstract super tensors."""
    def build() -> list[RTerm]:
        b = bracket(ctx, 1)
        literal = ctx.corrupt == "rmatrix"
        odd = ctx.one if literal else b
        # the e1^i (x) f1^i series needs factorials in q = xi^-2; (i)_xi! agrees only for ell = 3
        base = 1 if literal else -2
        corner_coef = {"1": ctx.one, "e3": -odd, "e2": -odd, "e3e2": -odd * odd}
        out = []
        for i in range(ctx.ell):
            ci = b ** i / qfactorial(ctx, i, base)
            for name, (shift, par) in CORNERS.items():
                out.append(RTerm(i, name, ci * corner_coef[name], (2 * i + shift[0], -i + shift[1]), par))
        return out

    return _memo(("rterms", ctx), build)


def e_part(M: ModuleObject, term: RTerm) -> SparseOp:
    """``e1^i`` times the corner's e-factor, on ``M``."""
    return _memo(("epart", M.ctx, M.key, term.i, term.corner), lambda: _part(M, term, "e"))


def f_part(M: ModuleObject, term: RTerm) -> SparseOp:
    """``f1^i`` times the corner's f-factor, on ``M``."""
    return _memo(("fpart", M.ctx, M.key, term.i, term.corner), lambda: _part(M, term, "f"))


def _part(M: ModuleObject, term: RTerm, side: str) -> SparseOp:
    ctx = M.ctx
    e3, f3 = e3_f3_actions(M)
    if side == "e":
        base = M.action("e1").power(term.i, ctx.one)
        corner = {"1": None, "e3": e3, "e2": M.action("e2"), "e3e2": e3 @ M.action("e2")}
    else:
        base = M.action("f1").power(term.i, ctx.one)
        corner = {"1": None, "e3": f3, "e2": M.action("f2"), "e3e2": f3 @ M.action("f2")}
    c = corner[term.corner]
    return base if c is None else base @ c


def rcheck_operator(M: ModuleObject, N: ModuleObject) -> Morphism:
    """``Rcheck`` on ``M (x) N``; odd terms act as ``kron(E P_M, F)``."""
    def build() -> Morphism:
        MN = tensor_module(M, N)
        P = M.parity_op()
        total = SparseOp.zeros((MN.dim, MN.dim), M.ctx.dtype)
        for t in rterms(M.ctx):
            E, F = e_part(M, t), f_part(N, t)
            if E.nnz == 0 or F.nnz == 0:
                continue
            if t.parity:
                E = E @ P
            total = total + E.kron(F) * t.coef
        return Morphism(MN, MN, total)

    return _memo(("rcheck", M.ctx, M.key, N.key), build)


def tau_operator(M: ModuleObject, N: ModuleObject) -> Morphism:
    """Super flip ``M (x) N -> N (x) M``."""
    ctx = M.ctx
    i, j = np.meshgrid(np.arange(M.dim), np.arange(N.dim), indexing="ij")
    i, j = i.ravel(), j.ravel()
    signs = (M.parity[i] * N.parity[j]) % 2
    vals = _array([ctx.num(-1) if s else ctx.one for s in signs], ctx.dtype)
    op = SparseOp((M.dim * N.dim, M.dim * N.dim), j * M.dim + i, i * N.dim + j, vals)
    return Morphism(tensor_module(M, N), tensor_module(N, M), op)


@dataclass(eq=False)
class BraidingOperator:
    """``c_{M,N} = tau_s o Rcheck o K`` with its factors kept."""

    tau: Morphism
    rcheck: Morphism
    k: Morphism
    morphism: Morphism

    @property
    def op(self) -> SparseOp:
        return self.morphism.op


def braiding(M: ModuleObject, N: ModuleObject) -> BraidingOperator:
    def build() -> BraidingOperator:
        tau, R, K = tau_operator(M, N), rcheck_operator(M, N), k_operator(M, N)
        return BraidingOperator(tau, R, K, tau @ R @ K)

    return _memo(("braiding", M.ctx, M.key, N.key), build)


def rcheck_inverse(M: ModuleObject, N: ModuleObject) -> Morphism:
    """Inverse of Rcheck by the terminating Neumann series (``Rcheck - 1`` is nilpotent)."""
    def build() -> Morphism:
        R = rcheck_operator(M, N)
        I = R.dom.identity()
        nil = R.op - I
        total, power = I, I
        for _ in range(4 * M.ctx.ell * (M.dim + N.dim) + 1):
            power = -(nil @ power)
            if power.nnz == 0:
                break
            total = total + power
        else:
            raise MorphismError("Rcheck - 1 failed to be nilpotent")
        return Morphism(R.dom, R.dom, total)

    return _memo(("rcheck_inv", M.ctx, M.key, N.key), build)


def braiding_inv(M: ModuleObject, N: ModuleObject) -> Morphism:
    """``c_{M,N}^{-1} : N (x) M -> M (x) N``."""
    def build() -> Morphism:
        K = k_operator(M, N)
        Kinv = Morphism(K.dom, K.cod, K.op.copy_with(np.array([1 / v for v in K.op.vals], dtype=K.op.dtype)))
        tau_inv = tau_operator(N, M)  # tau_s is an involution up to the flip of factors
        return Kinv @ rcheck_inverse(M, N) @ tau_inv

    return _memo(("braiding_inv", M.ctx, M.key, N.key), build)


# ---------------------------------------------------------------------------
# pivot and dualities


def pivot_operator(M: ModuleObject) -> Morphism:
    return Morphism(M, M, SparseOp.diag(M.pivot_values(), M.ctx.dtype))


def _signs(M: ModuleObject) -> np.ndarray:
    return M.parity_signs()


def ev_left(M: ModuleObject) -> Morphism:
    Md = dual_module(M)
    n = M.dim
    idx = np.arange(n)
    op = SparseOp((1, n * n), np.zeros(n, dtype=np.int64), idx * n + idx, _array([M.ctx.one] * n, M.ctx.dtype))
    return Morphism(tensor_module(Md, M), unit_module(M.ctx), op)


def coev_left(M: ModuleObject) -> Morphism:
    Md = dual_module(M)
    n = M.dim
    idx = np.arange(n)
    op = SparseOp((n * n, 1), idx * n + idx, np.zeros(n, dtype=np.int64), _array([M.ctx.one] * n, M.ctx.dtype))
    return Morphism(unit_module(M.ctx), tensor_module(M, Md), op)


def ev_right(M: ModuleObject) -> Morphism:
    Md = dual_module(M)
    n = M.dim
    idx = np.arange(n)
    op = SparseOp((1, n * n), np.zeros(n, dtype=np.int64), idx * n + idx, _signs(M) * M.pivot_values())
    return Morphism(tensor_module(M, Md), unit_module(M.ctx), op)


def coev_right(M: ModuleObject) -> Morphism:
    Md = dual_module(M)
    n = M.dim
    idx = np.arange(n)
    op = SparseOp((n * n, 1), idx * n + idx, np.zeros(n, dtype=np.int64), _signs(M) * M.pivot_values(inverse=True))
    return Morphism(unit_module(M.ctx), tensor_module(Md, M), op)


def trace_weights(M: ModuleObject) -> np.ndarray:
    """``(-1)^{|v|} g_v``: the weights of the right partial trace over ``M``."""
    return _signs(M) * M.pivot_values()


def qdim(M: ModuleObject) -> Any:
    """Categorical dimension ``ev_right o coev_left``."""
    w = trace_weights(M)
    total = M.ctx.zero
    for v in w:
        total = total + v
    return total


def ptr_right(f: Morphism, N: ModuleObject) -> Morphism:
    """Right partial trace of an endomorphism of ``X (x) N`` over ``N``."""
    dom = f.dom
    if dom.dim % N.dim:
        raise MorphismError("traced factor does not divide the domain")
    left = _left_factor(dom, N)
    return Morphism(left, left, f.op.partial_trace_right(left.dim, N.dim, trace_weights(N)))


def _left_factor(X: ModuleObject, N: ModuleObject) -> ModuleObject:
    if X.key[0] == "tensor" and X.key[2] == N.key:
        return module_from_key(X.ctx, X.key[1])
    if X == N:
        return unit_module(X.ctx)
    raise MorphismError(f"{N!r} is not the right factor of {X!r}")


# ---------------------------------------------------------------------------
# twist


def twist(M: ModuleObject) -> Morphism:
    """``theta_M = ptr_R(c_{M,M})`` evaluated without forming ``M (x) M``.

    Each Rcheck summand ``E_t (x) F_t`` contributes
    ``(-1)^{|t|} F_t g E_t diag(xi^-B(w, w + shift_t))``.
    """
    def build() -> Morphism:
        ctx = M.ctx
        g = trace_weights(M) * M.parity_signs()  # pivot values
        total = SparseOp.zeros((M.dim, M.dim), ctx.dtype)
        for t in rterms(ctx):
            E, F = e_part(M, t), f_part(M, t)
            if E.nnz == 0 or F.nnz == 0:
                continue
            shift = np.array(t.shift, dtype=np.int64) * M.wden
            kappa = xi_vector(ctx, -_bform(M.wnum, M.wnum + shift), M.wden * M.wden)
            term = (F @ E.scale_rows(g)).scale_cols(kappa) * t.coef
            total = total + (-term if t.parity else term)
        return Morphism(M, M, total)

    return _memo(("twist", M.ctx, M.key), build)


def twist_inv(M: ModuleObject) -> Morphism:
    """Inverse twist; on simple modules it is the reciprocal scalar."""
    th = twist(M)
    try:
        c = th.scalar()
        return Morphism(M, M, M.identity() * (1 / c))
    except MorphismError:
        dense = th.op.to_complex().to_dense() if M.ctx.is_double else None
        if dense is None:
            raise MorphismError("inverse twist on non-simple modules needs the double-precision backend")
        return Morphism(M, M, SparseOp.from_dense(np.linalg.inv(dense)))


def twist_bruteforce(M: ModuleObject) -> Morphism:
    """``ptr_R(c_{M,M})`` with the braiding formed explicitly."""
    c = braiding(M, M).morphism
    return ptr_right(c, M)


# ---------------------------------------------------------------------------
# eps pairing


def pairing_scalar(ctx: Context, mubar, t) -> Any:
    """``g^{. t}``: scalar of the double braiding of ``eps^t`` with degree ``mubar``.

    Equals ``exp(-4 pi i (m1 u + m2 s + 2 m2 u))`` for ``t = (s, u, p)``.
    """
    m1, m2 = (as_fraction(x) for x in mubar)
    s, u = int(t[0]), int(t[1])
    return xi_pow(ctx, -2 * ctx.ell * (m1 * u + m2 * s + 2 * m2 * u))


def double_braiding(M: ModuleObject, N: ModuleObject) -> Morphism:
    """``c_{N,M} o c_{M,N}`` on ``M (x) N``."""
    return braiding(N, M).morphism @ braiding(M, N).morphism


def dual_morphism(f: Morphism) -> Morphism:
    """Transpose ``f* : cod* -> dom*`` of an even morphism."""
    return Morphism(dual_module(f.cod), dual_module(f.dom), f.op.T)
