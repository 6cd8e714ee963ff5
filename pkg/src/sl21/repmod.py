"""Weight supermodules over the unrolled quantum group of sl(2|1).

Modules are finite-dimensional, carry a Z/2 parity on each basis vector, exact
rational h-weights and the four generator actions as sparse operators.  The
structural ``key`` records how a module was built (typical, eps, dual, tensor)
and is what equality compares.

Sign conventions:

* tensor products act through the coproduct with Koszul signs,
  ``(x (x) y)(v (x) w) = (-1)^{|y||v|} xv (x) yw``;
* the dual action is ``(x.f)(v) = (-1)^{|x||f|} f(S(x) v)``.

Module construction is memoised in a registry guarded by a lock, so modules
may be requested from several threads at once.
"""

from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable

import numpy as np

from .scalar import Context, as_fraction, fraction_str, qnum, xi_pow
from .sparse import SparseOp

GENERATORS = ("e1", "e2", "f1", "f2")
# weight shift of each generator in the (h1, h2) lattice
ROOTS = {"e1": (2, -1), "e2": (-1, 0), "f1": (-2, 1), "f2": (1, 0)}
GEN_PARITY = {"e1": 0, "e2": 1, "f1": 0, "f2": 1}
CARTAN = ((2, -1), (-1, 0))

GDegree = tuple  # (Fraction, Fraction), each reduced to [0, 1)


class ModuleError(ValueError):
    """Invalid module construction (atypical weight, bad descriptor...)."""


# ---------------------------------------------------------------------------
# weights and degrees


@dataclass(frozen=True)
class Weight:
    """A highest weight ``(mu1, mu2)`` with exact rational entries."""

    mu1: Fraction
    mu2: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu1", as_fraction(self.mu1))
        object.__setattr__(self, "mu2", as_fraction(self.mu2))

    @classmethod
    def parse(cls, value: Any) -> "Weight":
        """Accept a Weight, a pair of rationals or a ``"a/b,c/d"`` string."""
        if isinstance(value, Weight):
            return value
        if isinstance(value, str):
            value = value.split(",")
        a, b = value
        return cls(as_fraction(a), as_fraction(b))

    @property
    def gdegree(self) -> GDegree:
        return gdegree(self.mu1, self.mu2)

    def shift(self, a: Fraction | int, b: Fraction | int) -> "Weight":
        return Weight(self.mu1 + a, self.mu2 + b)

    def to_json(self) -> list[str]:
        return [fraction_str(self.mu1), fraction_str(self.mu2)]

    def __str__(self) -> str:
        return f"({self.mu1}, {self.mu2})"


def gdegree(a: Any, b: Any) -> GDegree:
    """Class of ``(a, b)`` in (C/Z)^2 for rational input."""
    return (as_fraction(a) % 1, as_fraction(b) % 1)


def in_singular_locus(mubar: Iterable) -> bool:
    """Membership of a degree in the singular set X."""
    m1, m2 = (as_fraction(x) for x in mubar)
    return any((2 * x) % 1 == 0 for x in (m1, m2, m1 + m2))


def is_typical(ctx: Context, mu: Weight) -> bool:
    """Exact typicality test: ``[mu1-p+1] != 0`` for ``1 <= p < ell`` and ``[mu2][mu1+mu2+1] != 0``."""
    mu = Weight.parse(mu)
    ell = ctx.ell

    def vanishes(x: Fraction) -> bool:  # {x} = 0  iff  2x/ell is an integer
        return (2 * x / ell).denominator == 1

    if any(vanishes(mu.mu1 - p + 1) for p in range(1, ell)):
        return False
    return not (vanishes(mu.mu2) or vanishes(mu.mu1 + mu.mu2 + 1))


# ---------------------------------------------------------------------------
# module objects


@dataclass(eq=False)
class ModuleObject:
    """A finite-dimensional weight supermodule.

    ``wnum`` holds integer weight numerators, one row ``(h1, h2)`` per basis
    vector, over the common denominator ``wden``.
    """

    ctx: Context
    key: tuple
    labels: tuple
    parity: np.ndarray
    wnum: np.ndarray
    wden: int
    actions: dict
    factors: tuple = field(default=())
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self.factors:
            self.factors = (self,)

    # identity ---------------------------------------------------------------
    def __eq__(self, other: object) -> bool:
        return isinstance(other, ModuleObject) and self.key == other.key and self.ctx.ell == other.ctx.ell

    def __hash__(self) -> int:
        return hash((self.key, self.ctx.ell))

    def __repr__(self) -> str:
        return f"ModuleObject({describe(self.key)}, dim={self.dim})"

    # data -------------------------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def form(self) -> str:
        return self.key[0]

    @property
    def hweights(self) -> list[tuple[Fraction, Fraction]]:
        return [(Fraction(int(a), self.wden), Fraction(int(b), self.wden)) for a, b in self.wnum]

    @property
    def gdegree(self) -> GDegree:
        if self.dim == 0:
            return (Fraction(0), Fraction(0))
        return gdegree(Fraction(int(self.wnum[0, 0]), self.wden), Fraction(int(self.wnum[0, 1]), self.wden))

    def action(self, name: str) -> SparseOp:
        if not self.actions:
            # tensor and dual actions are built on first use
            self.actions.update(_derived_actions(self))
        return self.actions[name]

    # derived diagonal operators --------------------------------------------
    def xi_weight(self, i: int, scale: int = 1) -> np.ndarray:
        """Vector of ``xi^(scale * h_i)`` over the basis."""
        key = ("xiw", i, scale)
        if key not in self._cache:
            self._cache[key] = xi_vector(self.ctx, scale * self.wnum[:, i], self.wden)
        return self._cache[key]

    def k_op(self, i: int, inverse: bool = False) -> SparseOp:
        return SparseOp.diag(self.xi_weight(i, -1 if inverse else 1), self.ctx.dtype)

    def h_op(self, i: int) -> SparseOp:
        ctx = self.ctx
        vals = [ctx.num(Fraction(int(a), self.wden)) for a in self.wnum[:, i]]
        return SparseOp.diag(vals, ctx.dtype)

    def parity_signs(self) -> np.ndarray:
        ctx = self.ctx
        return _array([ctx.num(1 - 2 * int(p)) for p in self.parity], ctx.dtype)

    def parity_op(self) -> SparseOp:
        return SparseOp.diag(self.parity_signs(), self.ctx.dtype)

    def identity(self) -> SparseOp:
        return SparseOp.identity(self.dim, self.ctx.one, self.ctx.dtype)

    def pivot_values(self, inverse: bool = False) -> np.ndarray:
        """Eigenvalues of the pivot ``g = k1^-ell k2^-2``: ``xi^(-ell h1 - 2 h2)``."""
        key = ("pivot", inverse)
        if key not in self._cache:
            nums = -(self.ctx.ell * self.wnum[:, 0] + 2 * self.wnum[:, 1])
            self._cache[key] = xi_vector(self.ctx, -nums if inverse else nums, self.wden)
        return self._cache[key]


def _array(values, dtype) -> np.ndarray:
    if dtype == object:
        out = np.empty(len(values), dtype=object)
        out[:] = list(values)
        return out
    return np.asarray(values, dtype=dtype)


def xi_vector(ctx: Context, nums: np.ndarray, den: int) -> np.ndarray:
    """``xi^(nums/den)`` elementwise, evaluating each distinct exponent once."""
    nums = np.asarray(nums, dtype=np.int64) % (ctx.ell * den)
    uniq, inv = np.unique(nums, return_inverse=True)
    table = _array([xi_pow(ctx, Fraction(int(u), den)) for u in uniq], ctx.dtype)
    return table[inv]


# ---------------------------------------------------------------------------
# registry


class _Registry:
    """LRU store of built modules, bounded by their total dimension.

    Modules compare by key, so an evicted module is simply rebuilt on demand.
    """

    def __init__(self, budget: int = 4_000_000) -> None:
        self.budget = budget
        self._lock = threading.Lock()
        self._store: OrderedDict = OrderedDict()
        self._total = 0

    def get(self, ctx: Context, key: tuple, build) -> ModuleObject:
        rkey = (ctx, key)
        with self._lock:
            hit = self._store.get(rkey)
            if hit is not None:
                self._store.move_to_end(rkey)
                return hit
        module = build()
        with self._lock:
            if rkey in self._store:
                return self._store[rkey]
            self._store[rkey] = module
            self._total += module.dim
            while self._total > self.budget and len(self._store) > 1:
                _, old = self._store.popitem(last=False)
                self._total -= old.dim
        return module

    def clear(self) -> None:
        with self._lock:
            self._store.clear()
            self._total = 0


REGISTRY = _Registry()


# ---------------------------------------------------------------------------
# constructors


def typical_basis(ell: int) -> list[tuple[int, int, int]]:
    return [(r, s, p) for r in (0, 1) for s in (0, 1) for p in range(ell)]


def typical_module(ctx: Context, mu: Any, allow_atypical: bool = False) -> ModuleObject:
    """The 4*ell dimensional typical module with highest weight ``mu``.

    ``allow_atypical`` builds the same formulas at an atypical weight (the
    result is then not simple); it is meant for inspection only.
    """
    mu = Weight.parse(mu)
    if not allow_atypical and not is_typical(ctx, mu):
        raise ModuleError(f"weight {mu} is atypical at ell={ctx.ell}")
    return REGISTRY.get(ctx, ("typical", mu.mu1, mu.mu2), lambda: _build_typical(ctx, mu))


def _build_typical(ctx: Context, mu: Weight) -> ModuleObject:
    ell = ctx.ell
    basis = typical_basis(ell)
    idx = {b: i for i, b in enumerate(basis)}
    n = len(basis)
    ents: dict[str, list] = {g: [] for g in GENERATORS}
    lam1, lam2inv = xi_pow(ctx, mu.mu1), xi_pow(ctx, -mu.mu2)
    literal_f1 = ctx.corrupt == "f1"

    def put(gen: str, target: tuple, source: tuple, coeff: Any) -> None:
        if target in idx:
            ents[gen].append((idx[target], idx[source], coeff))

    for b in basis:
        r, s, p = b
        # f1: xi^(s-r) w_{r,s,p+1} - r(1-s) xi^(-r) w_{r-1,s+1,p}
        if literal_f1:
            put("f1", (r, s, p + 1), b, xi_pow(ctx, s - p))
            if r == 1 and s == 0:
                put("f1", (0, 1, p), b, -xi_pow(ctx, 0))
        else:
            put("f1", (r, s, p + 1), b, xi_pow(ctx, s - r))
            if r == 1 and s == 0:
                put("f1", (0, 1, p), b, -xi_pow(ctx, -1))
        if r == 0:
            put("f2", (1, s, p), b, ctx.one)
        if s == 1 and r == 0:
            put("e1", (1, 0, p), b, -lam1 * xi_pow(ctx, -2 * p + 1))
        if p > 0:
            put("e1", (r, s, p - 1), b, qnum(ctx, p) * qnum(ctx, mu.mu1 - p + 1))
        if r == 1:
            put("e2", (0, s, p), b, qnum(ctx, mu.mu2 + p + s))
        if s == 1:
            put("e2", (r, 0, p + 1), b, (-1) ** r * lam2inv * xi_pow(ctx, -p))
    actions = {g: SparseOp.from_entries((n, n), ents[g], ctx.dtype) for g in GENERATORS}
    den = math.lcm(mu.mu1.denominator, mu.mu2.denominator)
    wnum = np.array([[int((mu.mu1 + r - s - 2 * p) * den), int((mu.mu2 + s + p) * den)] for r, s, p in basis],
                    dtype=np.int64)
    parity = np.array([(r + s) % 2 for r, s, _ in basis], dtype=np.int64)
    return ModuleObject(ctx, ("typical", mu.mu1, mu.mu2), tuple(basis), parity, wnum, den, actions)


def eps_module(ctx: Context, t: Iterable[int]) -> ModuleObject:
    """One-dimensional module with h-weights ``(ell s, ell u)`` and parity ``p``."""
    s, u, p = (int(x) for x in t)
    p %= 2
    key = ("unit",) if (s, u, p) == (0, 0, 0) else ("eps", s, u, p)

    def build() -> ModuleObject:
        zero = SparseOp.zeros((1, 1), ctx.dtype)
        return ModuleObject(ctx, key, (key,), np.array([p]), np.array([[ctx.ell * s, ctx.ell * u]], dtype=np.int64),
                            1, {g: zero for g in GENERATORS})

    return REGISTRY.get(ctx, key, build)


def unit_module(ctx: Context) -> ModuleObject:
    return eps_module(ctx, (0, 0, 0))


def eps_parameters(M: ModuleObject) -> tuple[int, int, int]:
    if M.key[0] == "unit":
        return (0, 0, 0)
    if M.key[0] != "eps":
        raise ModuleError(f"{M!r} is not an eps module")
    return M.key[1:]


def dual_module(M: ModuleObject) -> ModuleObject:
    """Dual module: negated weights, same parities, action through the antipode."""
    if M.key[0] == "unit":
        return M
    return REGISTRY.get(M.ctx, ("dual", M.key), lambda: _build_dual(M))


def _build_dual(M: ModuleObject) -> ModuleObject:
    labels = tuple(("*", lab) for lab in M.labels)
    return ModuleObject(M.ctx, ("dual", M.key), labels, M.parity.copy(), -M.wnum, M.wden, {})


def _dual_actions(M: ModuleObject) -> dict:
    signs = M.parity_signs()
    antipode = {
        "e1": -(M.k_op(0) @ M.action("e1")),
        "e2": -(M.k_op(1) @ M.action("e2")),
        "f1": -(M.action("f1") @ M.k_op(0, inverse=True)),
        "f2": -(M.action("f2") @ M.k_op(1, inverse=True)),
    }
    actions = {}
    for g, S in antipode.items():
        D = S.T
        actions[g] = D.scale_cols(signs) if GEN_PARITY[g] else D
    return actions


def tensor_module(M: ModuleObject, N: ModuleObject) -> ModuleObject:
    """Tensor product via the coproduct; the unit is absorbed on either side.

    Products are normalised to left-nested form, ``M (x) (A (x) B) = (M (x) A) (x) B``;
    both bracketings give the same basis order and the same matrices.
    """
    if M.key[0] == "unit":
        return N
    if N.key[0] == "unit":
        return M
    if N.key[0] == "tensor":
        return tensor_module(tensor_module(M, module_from_key(N.ctx, N.key[1])), module_from_key(N.ctx, N.key[2]))
    return REGISTRY.get(M.ctx, ("tensor", M.key, N.key), lambda: _build_tensor(M, N))


def tensor_all(ctx: Context, modules: Iterable[ModuleObject]) -> ModuleObject:
    """Left-nested tensor product of a sequence (the unit for an empty one)."""
    out = unit_module(ctx)
    for M in modules:
        out = tensor_module(out, M)
    return out


def _tensor_actions(M: ModuleObject, N: ModuleObject) -> dict:
    IM, IN = M.identity(), N.identity()
    P = M.parity_op()
    return {
        "e1": M.action("e1").kron(IN) + M.k_op(0, inverse=True).kron(N.action("e1")),
        "e2": M.action("e2").kron(IN) + (M.k_op(1, inverse=True) @ P).kron(N.action("e2")),
        "f1": M.action("f1").kron(N.k_op(0)) + IM.kron(N.action("f1")),
        "f2": M.action("f2").kron(N.k_op(1)) + P.kron(N.action("f2")),
    }


def _derived_actions(T: ModuleObject) -> dict:
    """Generator actions of a tensor or dual module, rebuilt from its factors' keys."""
    if T.key[0] == "tensor":
        return _tensor_actions(module_from_key(T.ctx, T.key[1]), module_from_key(T.ctx, T.key[2]))
    if T.key[0] == "dual":
        return _dual_actions(module_from_key(T.ctx, T.key[1]))
    raise ModuleError(f"{T!r} has no generator actions")


def _build_tensor(M: ModuleObject, N: ModuleObject) -> ModuleObject:
    den = math.lcm(M.wden, N.wden)
    wm = M.wnum * (den // M.wden)
    wn = N.wnum * (den // N.wden)
    wnum = (wm[:, None, :] + wn[None, :, :]).reshape(-1, 2)
    parity = ((M.parity[:, None] + N.parity[None, :]) % 2).ravel()
    labels = tuple((a, b) for a in M.labels for b in N.labels)
    return ModuleObject(M.ctx, ("tensor", M.key, N.key), labels, parity, wnum, den, {},
                        factors=M.factors + N.factors)


def e3_f3_actions(M: ModuleObject) -> tuple[SparseOp, SparseOp]:
    """``e3 = e1 e2 - xi^-1 e2 e1`` and ``f3 = f2 f1 - xi f1 f2``."""
    key = ("e3f3",)
    if key not in M._cache:
        ctx = M.ctx
        e1, e2, f1, f2 = (M.action(g) for g in GENERATORS)
        e3 = e1 @ e2 - (e2 @ e1) * xi_pow(ctx, -1)
        f3 = f2 @ f1 - (f1 @ f2) * xi_pow(ctx, 1)
        M._cache[key] = (e3, f3)
    return M._cache[key]


def periodicity_isomorphism(V: ModuleObject, W: ModuleObject) -> SparseOp:
    """Basis identification between typicals whose weights differ by ``(ell a, ell b)``.

    Returns the identity matrix after checking the weight difference.  Both
    modules carry identical generator actions and identical ``k_i`` eigenvalues.
    """
    if V.form != "typical" or W.form != "typical":
        raise ModuleError("periodicity applies to typical modules")
    d1, d2 = W.key[1] - V.key[1], W.key[2] - V.key[2]
    if (d1 / V.ctx.ell).denominator != 1 or (d2 / V.ctx.ell).denominator != 1:
        raise ModuleError("weights do not differ by an element of (ell Z)^2")
    return V.identity()


# ---------------------------------------------------------------------------
# relation audit


@dataclass
class RelationReport:
    """Residual Frobenius norms (upper bounds for operator norms) per relation."""

    module: str
    residuals: dict[str, float]

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def failures(self, tol: float) -> dict[str, float]:
        return {k: v for k, v in self.residuals.items() if not v <= tol}

    def passed(self, tol: float) -> bool:
        return not self.failures(tol)


def check_algebra_relations(M: ModuleObject) -> RelationReport:
    """Evaluate every defining relation of the algebra on ``M``."""
    ctx = M.ctx
    e1, e2, f1, f2 = (M.action(g) for g in GENERATORS)
    gens = {"e1": e1, "e2": e2, "f1": f1, "f2": f2}
    K = [M.k_op(0), M.k_op(1)]
    Kinv = [M.k_op(0, inverse=True), M.k_op(1, inverse=True)]
    H = [M.h_op(0), M.h_op(1)]
    I = M.identity()
    q = xi_pow(ctx, 1)
    qinv = xi_pow(ctx, -1)
    denom = q - qinv
    res: dict[str, float] = {}

    def r(name: str, op: SparseOp) -> None:
        res[name] = op.fro_norm()

    for i in range(2):
        for j, (e, f) in enumerate(((e1, f1), (e2, f2))):
            a = CARTAN[i][j]
            r(f"k{i+1}e{j+1}", K[i] @ e @ Kinv[i] - e * xi_pow(ctx, a))
            r(f"k{i+1}f{j+1}", K[i] @ f @ Kinv[i] - f * xi_pow(ctx, -a))
            r(f"h{i+1}e{j+1}", H[i] @ e - e @ H[i] - e * ctx.num(a))
            r(f"h{i+1}f{j+1}", H[i] @ f - f @ H[i] + f * ctx.num(a))
    r("k1k2", K[0] @ K[1] - K[1] @ K[0])
    r("k_inverse", K[0] @ Kinv[0] - I)
    r("e1f1", e1 @ f1 - f1 @ e1 - (K[0] - Kinv[0]) * (1 / denom))
    r("e2f2", e2 @ f2 + f2 @ e2 - (K[1] - Kinv[1]) * (1 / denom))
    r("e1f2", e1 @ f2 - f2 @ e1)
    r("e2f1", e2 @ f1 - f1 @ e2)
    r("e2_squared", e2 @ e2)
    r("f2_squared", f2 @ f2)
    qq = q + qinv
    r("serre_e", e1 @ e1 @ e2 - (e1 @ e2 @ e1) * qq + e2 @ e1 @ e1)
    r("serre_f", f1 @ f1 @ f2 - (f1 @ f2 @ f1) * qq + f2 @ f1 @ f1)
    r("e1_nilpotent", e1.power(ctx.ell, ctx.one))
    r("f1_nilpotent", f1.power(ctx.ell, ctx.one))
    # xi^{h_i} = k_i: the k_i eigenvalues must follow from the weights, and each
    # generator must shift weights exactly by its root and parity by its degree
    for g, op in gens.items():
        d1, d2 = ROOTS[g]
        wr, wc = M.wnum[op.rows], M.wnum[op.cols]
        bad_w = (wr[:, 0] - wc[:, 0] != d1 * M.wden) | (wr[:, 1] - wc[:, 1] != d2 * M.wden)
        bad_p = (M.parity[op.rows] - M.parity[op.cols] - GEN_PARITY[g]) % 2 != 0
        res[f"grading_{g}"] = op.copy_with(op.vals * (bad_w | bad_p)).fro_norm() if op.nnz else 0.0
    for i in range(2):
        lam = M.xi_weight(i)
        res[f"xi_h{i+1}_consistency"] = max(
            (float(abs(lam[k] - xi_pow(ctx, Fraction(int(M.wnum[k, i]), M.wden)))) for k in range(M.dim)),
            default=0.0)
    return RelationReport(describe(M.key), res)


# ---------------------------------------------------------------------------
# descriptors


def describe(key: tuple) -> str:
    form = key[0]
    if form == "typical":
        return f"V({key[1]},{key[2]})"
    if form == "unit":
        return "I"
    if form == "eps":
        return f"eps({key[1]},{key[2]},{key[3]})"
    if form == "dual":
        return f"{describe(key[1])}*"
    if form == "tensor":
        return f"({describe(key[1])} x {describe(key[2])})"
    return repr(key)


def module_from_descriptor(ctx: Context, desc: dict) -> ModuleObject:
    """Build a module from its JSON descriptor."""
    if not isinstance(desc, dict) or "form" not in desc:
        raise ModuleError(f"module descriptor must be an object with a 'form' field: {desc!r}")
    form = desc["form"]
    try:
        if form == "typical":
            return typical_module(ctx, Weight.parse(desc["mu"]))
        if form == "unit":
            return unit_module(ctx)
        if form == "eps":
            return eps_module(ctx, desc["t"])
        if form == "dual":
            return dual_module(module_from_descriptor(ctx, desc["of"]))
        if form == "tensor":
            parts = [module_from_descriptor(ctx, d) for d in desc["of"]]
            return tensor_all(ctx, parts)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, ModuleError):
            raise
        raise ModuleError(f"bad module descriptor {desc!r}: {exc}") from exc
    raise ModuleError(f"unknown module form {form!r}")


def key_to_descriptor(key: tuple) -> dict:
    form = key[0]
    if form == "typical":
        return {"form": "typical", "mu": [fraction_str(key[1]), fraction_str(key[2])]}
    if form == "unit":
        return {"form": "unit"}
    if form == "eps":
        return {"form": "eps", "t": list(key[1:])}
    if form == "dual":
        return {"form": "dual", "of": key_to_descriptor(key[1])}
    if form == "tensor":
        return {"form": "tensor", "of": [key_to_descriptor(key[1]), key_to_descriptor(key[2])]}
    raise ModuleError(f"unknown key {key!r}")


def module_from_key(ctx: Context, key: tuple) -> ModuleObject:
    return module_from_descriptor(ctx, key_to_descriptor(key))


def module_descriptor(M: ModuleObject) -> dict:
    return key_to_descriptor(M.key)


def generic_weights(ctx: Context, n: int, rng: np.random.Generator,
                    denominators: tuple[int, ...] = (5, 7, 11, 13)) -> list[Weight]:
    """Seeded generic typical weights ``a/b`` whose degree avoids X."""
    out: list[Weight] = []
    while len(out) < n:
        b1, b2 = (int(x) for x in rng.choice(denominators, size=2))
        a1 = int(rng.integers(-3 * b1, 3 * b1))
        a2 = int(rng.integers(-3 * b2, 3 * b2))
        mu = Weight(Fraction(a1, b1), Fraction(a2, b2))
        if not in_singular_locus(mu.gdegree) and is_typical(ctx, mu):
            out.append(mu)
    return out


# ---------------------------------------------------------------------------
# morphisms


class MorphismError(ValueError):
    """Domain/codomain mismatch, odd entries or a failed scalar extraction."""


@dataclass(eq=False)
class Morphism:
    """A parity-even linear map ``dom -> cod`` stored as a sparse matrix."""

    dom: ModuleObject
    cod: ModuleObject
    op: SparseOp

    def __post_init__(self) -> None:
        if self.op.shape != (self.cod.dim, self.dom.dim):
            raise MorphismError(f"matrix shape {self.op.shape} does not match {self.cod!r} <- {self.dom!r}")

    @property
    def ctx(self) -> Context:
        return self.dom.ctx

    @classmethod
    def identity(cls, M: ModuleObject) -> "Morphism":
        return cls(M, M, M.identity())

    def __matmul__(self, other: "Morphism") -> "Morphism":
        if other.cod != self.dom:
            raise MorphismError(f"cannot compose {self.dom!r} <- ... with ... -> {other.cod!r}")
        return Morphism(other.dom, self.cod, self.op @ other.op)

    def __add__(self, other: "Morphism") -> "Morphism":
        self._same_type(other)
        return Morphism(self.dom, self.cod, self.op + other.op)

    def __sub__(self, other: "Morphism") -> "Morphism":
        self._same_type(other)
        return Morphism(self.dom, self.cod, self.op - other.op)

    def __mul__(self, c: Any) -> "Morphism":
        return Morphism(self.dom, self.cod, self.op * c)

    __rmul__ = __mul__

    def _same_type(self, other: "Morphism") -> None:
        if self.dom != other.dom or self.cod != other.cod:
            raise MorphismError("morphisms have different domains or codomains")

    def tensor(self, other: "Morphism") -> "Morphism":
        """``f (x) g`` for even morphisms (no Koszul sign arises)."""
        return Morphism(tensor_module(self.dom, other.dom), tensor_module(self.cod, other.cod),
                        self.op.kron(other.op))

    def norm(self) -> float:
        return self.op.fro_norm()

    def parity_violation(self) -> float:
        """Norm of the entries connecting basis vectors of different parity."""
        op = self.op
        bad = self.cod.parity[op.rows] != self.dom.parity[op.cols]
        return op.copy_with(op.vals * bad).fro_norm() if op.nnz else 0.0

    def weight_violation(self) -> float:
        """Norm of the entries connecting basis vectors of different h-weight."""
        op = self.op
        if op.nnz == 0:
            return 0.0
        den = math.lcm(self.dom.wden, self.cod.wden)
        wr = self.cod.wnum[op.rows] * (den // self.cod.wden)
        wc = self.dom.wnum[op.cols] * (den // self.dom.wden)
        bad = np.any(wr != wc, axis=1)
        return op.copy_with(op.vals * bad).fro_norm()

    def intertwiner_residual(self) -> float:
        """Max over generators of ``|| f x - x f ||``."""
        return max((self.op @ self.dom.action(g) - self.cod.action(g) @ self.op).fro_norm() for g in GENERATORS)

    def scalar(self, tol: float | None = None) -> Any:
        """The scalar ``c`` with ``f = c Id``; raises if ``f`` is not scalar."""
        if self.dom != self.cod:
            raise MorphismError("scalar extraction needs an endomorphism")
        tol = self.ctx.tol if tol is None else tol
        n = self.dom.dim
        c = self.op.trace() / n
        off = (self.op - self.dom.identity() * c).fro_norm()
        scale = max(1.0, self.op.fro_norm())
        if off > tol * scale:
            raise MorphismError(f"endomorphism is not scalar: off-scalar residual {off:.3e} exceeds {tol:.1e} * {scale:.3e}")
        return c

    def to_json(self) -> dict:
        from .scalar import scalar_to_json

        return {
            "dom": module_descriptor(self.dom),
            "cod": module_descriptor(self.cod),
            "entries": [[int(r), int(c), *scalar_to_json(v)] for r, c, v in zip(self.op.rows, self.op.cols, self.op.vals)],
        }

    @classmethod
    def from_json(cls, ctx: Context, data: dict) -> "Morphism":
        from .scalar import scalar_from_json

        dom = module_from_descriptor(ctx, data["dom"])
        cod = module_from_descriptor(ctx, data["cod"])
        ents = [(int(r), int(c), scalar_from_json(ctx, [re, im])) for r, c, re, im in data["entries"]]
        return cls(dom, cod, SparseOp.from_entries((cod.dim, dom.dim), ents, ctx.dtype))
