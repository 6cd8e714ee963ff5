"""Sliced coloured ribbon tangles and their Reshetikhin-Turaev evaluation.

A :class:`Diagram` is a list of slices read bottom to top; each slice is a
row of :class:`Atom` values placed side by side.  Strands carry colour
references: a colour name ``"V"`` (upward strand) or ``"V*"`` (the dual
colour, i.e. a downward strand of ``V``).  Atom signatures::

    id(M)            [M]      -> [M]
    braid_pos(M, N)  [M, N]   -> [N, M]     c_{M,N}
    braid_neg(M, N)  [M, N]   -> [N, M]     c_{N,M}^{-1}
    twist_pos(M)     [M]      -> [M]        theta_M
    twist_neg(M)     [M]      -> [M]        theta_M^{-1}
    ev_left(M)       [M*, M]  -> []
    coev_left(M)     []       -> [M, M*]
    ev_right(M)      [M, M*]  -> []
    coev_right(M)    []       -> [M*, M]
    coupon(f)        factors of dom(f) -> factors of cod(f)

Colours may also be Kirby colours; evaluation then sums over their terms with
modified-dimension weights.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .mtrace import TraceError, module_modified_dim
from .repmod import (
    ModuleError,
    ModuleObject,
    Morphism,
    dual_module,
    module_descriptor,
    module_from_descriptor,
    tensor_all,
)
from .ribbon import (
    braiding,
    braiding_inv,
    coev_left,
    coev_right,
    ev_left,
    ev_right,
    trace_weights,
    twist,
    twist_inv,
)
from .scalar import Context
from .sparse import SparseOp

ATOM_ARITY = {
    "id": 1, "braid_pos": 2, "braid_neg": 2, "twist_pos": 1, "twist_neg": 1,
    "ev_left": 1, "ev_right": 1, "coev_left": 1, "coev_right": 1, "coupon": 1,
}


class DiagramError(ValueError):
    """Malformed diagram; messages name the slice index and position."""


@dataclass(frozen=True)
class Atom:
    """An elementary tangle piece; ``args`` are colour references or a coupon name."""

    kind: str
    args: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.kind not in ATOM_ARITY:
            raise DiagramError(f"unknown atom kind {self.kind!r}")
        if len(self.args) != ATOM_ARITY[self.kind]:
            raise DiagramError(f"atom {self.kind} takes {ATOM_ARITY[self.kind]} argument(s), got {len(self.args)}")

    def to_json(self) -> list[str]:
        return [self.kind, *self.args]

    @classmethod
    def from_json(cls, data: Sequence[str]) -> "Atom":
        if not isinstance(data, (list, tuple)) or not data or not all(isinstance(x, str) for x in data):
            raise DiagramError(f"atom must be a non-empty array of strings, got {data!r}")
        return cls(data[0], tuple(data[1:]))


def atom(kind: str, *args: str) -> Atom:
    return Atom(kind, tuple(args))


@dataclass
class Diagram:
    """Colour registry, coupon registry and slices (bottom to top)."""

    ctx: Context
    colors: dict[str, Any]
    slices: list[list[Atom]]
    morphisms: dict[str, Morphism] = field(default_factory=dict)
    # keeps the original colour descriptors so JSON round trips are exact
    descriptors: dict[str, Any] = field(default_factory=dict)

    # JSON ------------------------------------------------------------------
    def to_json(self) -> dict:
        colors = {}
        for name, col in self.colors.items():
            if name in self.descriptors:
                colors[name] = self.descriptors[name]
            elif isinstance(col, ModuleObject):
                colors[name] = module_descriptor(col)
            else:
                colors[name] = col.descriptor()
        out: dict[str, Any] = {"colors": colors}
        if self.morphisms:
            out["morphisms"] = {k: m.to_json() for k, m in self.morphisms.items()}
        out["slices"] = [[a.to_json() for a in row] for row in self.slices]
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=False)

    @classmethod
    def from_json(cls, ctx: Context, data: dict) -> "Diagram":
        if not isinstance(data, dict) or "colors" not in data or "slices" not in data:
            raise DiagramError("diagram JSON needs 'colors' and 'slices'")
        colors, descriptors = {}, {}
        for name, desc in data["colors"].items():
            if name.endswith("*"):
                raise DiagramError(f"colour name {name!r} may not end with '*'")
            colors[name] = color_from_descriptor(ctx, desc)
            descriptors[name] = desc
        morphisms = {k: Morphism.from_json(ctx, v) for k, v in data.get("morphisms", {}).items()}
        if not isinstance(data["slices"], list):
            raise DiagramError("'slices' must be an array of arrays")
        slices = []
        for i, row in enumerate(data["slices"]):
            if not isinstance(row, list):
                raise DiagramError(f"slice {i}: must be an array of atoms")
            try:
                slices.append([Atom.from_json(a) for a in row])
            except DiagramError as exc:
                raise DiagramError(f"slice {i}: {exc}") from None
        return cls(ctx, colors, slices, morphisms, descriptors)

    @classmethod
    def loads(cls, ctx: Context, text: str) -> "Diagram":
        return cls.from_json(ctx, json.loads(text))

    # structure --------------------------------------------------------------
    def kirby_names(self) -> list[str]:
        return [k for k, v in self.colors.items() if not isinstance(v, ModuleObject)]

    def specialize(self, choice: dict[str, ModuleObject]) -> "Diagram":
        colors = dict(self.colors)
        colors.update(choice)
        return Diagram(self.ctx, colors, self.slices, self.morphisms)

    def is_closed(self) -> bool:
        src, tgt = boundary(self)
        return not src and not tgt


def color_from_descriptor(ctx: Context, desc: Any) -> Any:
    if isinstance(desc, dict) and desc.get("form") == "kirby":
        from .modularity import kirby_color

        try:
            return kirby_color(ctx, desc["degree"], parity=int(desc.get("parity", 0)))
        except (KeyError, TypeError) as exc:
            raise DiagramError(f"bad Kirby colour descriptor {desc!r}") from exc
    try:
        return module_from_descriptor(ctx, desc)
    except ModuleError as exc:
        raise DiagramError(str(exc)) from None


# ---------------------------------------------------------------------------
# signatures and validation


def _resolve(D: Diagram, ref: str, where: str) -> ModuleObject:
    name, dual = (ref[:-1], True) if ref.endswith("*") else (ref, False)
    if name not in D.colors:
        raise DiagramError(f"{where}: unknown colour {ref!r}")
    col = D.colors[name]
    if not isinstance(col, ModuleObject):
        raise DiagramError(f"{where}: colour {name!r} is a Kirby colour and must be specialised first")
    return dual_module(col) if dual else col


def _ref_dual(ref: str) -> str:
    return ref[:-1] if ref.endswith("*") else ref + "*"


def atom_signature(D: Diagram, a: Atom, where: str = "") -> tuple[list[str], list[str]]:
    """Source and target colour references of an atom."""
    k, args = a.kind, a.args
    if k == "coupon":
        if args[0] not in D.morphisms:
            raise DiagramError(f"{where}: unknown coupon {args[0]!r}")
        f = D.morphisms[args[0]]
        return [("#", m) for m in f.dom.factors if m.form != "unit"], [("#", m) for m in f.cod.factors if m.form != "unit"]
    for r in args:
        name = r[:-1] if r.endswith("*") else r
        if name not in D.colors:
            raise DiagramError(f"{where}: unknown colour {r!r}")
    if k in ("id", "twist_pos", "twist_neg"):
        return [args[0]], [args[0]]
    if k in ("braid_pos", "braid_neg"):
        return [args[0], args[1]], [args[1], args[0]]
    m = args[0]
    if m.endswith("*"):
        raise DiagramError(f"{where}: {k} on a dual colour {m!r}; use the opposite duality on {m[:-1]!r}")
    if k == "ev_left":
        return [_ref_dual(m), m], []
    if k == "coev_left":
        return [], [m, _ref_dual(m)]
    if k == "ev_right":
        return [m, _ref_dual(m)], []
    if k == "coev_right":
        return [], [_ref_dual(m), m]
    raise DiagramError(f"{where}: unknown atom {k!r}")


def _strand_obj(D: Diagram, ref: Any, where: str) -> Any:
    if isinstance(ref, tuple):
        return ref[1]
    name = ref[:-1] if ref.endswith("*") else ref
    col = D.colors.get(name)
    if col is None:
        raise DiagramError(f"{where}: unknown colour {ref!r}")
    if isinstance(col, ModuleObject):
        return dual_module(col) if ref.endswith("*") else col
    return ref  # Kirby colours compare by reference


def _strand_label(s: Any) -> str:
    return repr(s[1]) if isinstance(s, tuple) else str(s)


def boundary(D: Diagram) -> tuple[list, list]:
    """Source and target strand lists of the whole diagram (after validation)."""
    levels = validate(D)
    return levels[0], levels[-1]


def validate(D: Diagram) -> list[list]:
    """Check slice chaining; returns the strand list at every level."""
    levels: list[list] = []
    prev = None
    for i, row in enumerate(D.slices):
        src, tgt = [], []
        for j, a in enumerate(row):
            s, t = atom_signature(D, a, f"slice {i}, position {j}")
            src += [_strand_obj(D, x, f"slice {i}, position {j}") for x in s]
            tgt += [_strand_obj(D, x, f"slice {i}, position {j}") for x in t]
        if prev is not None:
            if len(prev) != len(src):
                raise DiagramError(f"slice {i}: expects {len(src)} incoming strands, previous slice provides {len(prev)}")
            for j, (p, s) in enumerate(zip(prev, src)):
                if p != s:
                    raise DiagramError(f"slice {i}, position {j}: strand {_strand_label(p)} does not match "
                                       f"expected {_strand_label(s)}")
        else:
            levels.append(src)
        levels.append(tgt)
        prev = tgt
    if not levels:
        levels = [[], []]
    return levels


# ---------------------------------------------------------------------------
# evaluation


def atom_morphism(D: Diagram, a: Atom) -> Morphism:
    k, args = a.kind, a.args
    if k == "coupon":
        return D.morphisms[args[0]]
    M = _resolve(D, args[0], k)
    if k == "id":
        return Morphism.identity(M)
    if k == "braid_pos":
        return braiding(M, _resolve(D, args[1], k)).morphism
    if k == "braid_neg":
        return braiding_inv(_resolve(D, args[1], k), M)
    if k == "twist_pos":
        return twist(M)
    if k == "twist_neg":
        return twist_inv(M)
    return {"ev_left": ev_left, "coev_left": coev_left, "ev_right": ev_right, "coev_right": coev_right}[k](M)


def _apply_local(state: SparseOp, left: int, mid: int, right: int, op: SparseOp) -> SparseOp:
    """``(Id_left (x) op (x) Id_right) @ state`` without forming the Kronecker product."""
    if state.nnz == 0 or op.nnz == 0:
        return SparseOp.zeros((left * op.shape[0] * right, state.shape[1]), state.dtype)
    rows = state.rows
    l_idx = rows // (mid * right)
    m_idx = (rows // right) % mid
    r_idx = rows % right
    # op sorted by column for the join
    order = np.argsort(op.cols, kind="stable")
    oc, orow, oval = op.cols[order], op.rows[order], op.vals[order]
    ptr = np.searchsorted(oc, np.arange(mid + 1))
    counts = ptr[m_idx + 1] - ptr[m_idx]
    total = int(counts.sum())
    rep = np.repeat(np.arange(state.nnz), counts)
    offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    oidx = np.repeat(ptr[m_idx], counts) + offs
    new_mid = op.shape[0]
    new_rows = (l_idx[rep] * new_mid + orow[oidx]) * right + r_idx[rep]
    vals = state.vals[rep] * oval[oidx]
    return SparseOp((left * new_mid * right, state.shape[1]), new_rows, state.cols[rep], vals)


def _slice_ops(D: Diagram, row: list[Atom]) -> list[tuple[int, Morphism]]:
    out = []
    for a in row:
        out.append((len(out), atom_morphism(D, a)))
    return out


def _propagate(D: Diagram, state: SparseOp, levels: list[list], start: int, stop: int,
               transpose: bool = False) -> SparseOp:
    """Apply slices ``start..stop-1`` (or their transposes, top-down) to ``state``."""
    indices = range(start, stop) if not transpose else range(stop - 1, start - 1, -1)
    for i in indices:
        row = D.slices[i]
        strands = levels[i + 1] if transpose else levels[i]
        dims = [s.dim for s in strands]
        pos = 0  # strand position in the current (partially updated) level
        cur = list(dims)
        for a in row:
            f = atom_morphism(D, a)
            op = f.op.T if transpose else f.op
            width_in = len(_factors(f.cod if transpose else f.dom))
            width_out = len(_factors(f.dom if transpose else f.cod))
            left = int(np.prod(cur[:pos], dtype=np.int64))
            mid = int(np.prod(cur[pos:pos + width_in], dtype=np.int64))
            right = int(np.prod(cur[pos + width_in:], dtype=np.int64))
            state = _apply_local(state, left, mid, right, op)
            out_dims = [m.dim for m in _factors(f.dom if transpose else f.cod)]
            cur = cur[:pos] + out_dims + cur[pos + width_in:]
            pos += width_out
    return state


def _factors(M: ModuleObject) -> tuple:
    return tuple(m for m in M.factors if m.form != "unit")


def _evaluate_single(D: Diagram) -> Morphism:
    levels = validate(D)
    src = tensor_all(D.ctx, levels[0])
    tgt = tensor_all(D.ctx, levels[-1])
    state = src.identity()
    state = _propagate(D, state, levels, 0, len(D.slices))
    return Morphism(src, tgt, state)


def _kirby_expansions(D: Diagram) -> Iterable[tuple[Any, Diagram]]:
    names = D.kirby_names()
    if not names:
        yield D.ctx.one, D
        return
    for combo in itertools.product(*(D.colors[n].terms for n in names)):
        weight = D.ctx.one
        choice = {}
        for n, (mod, coef) in zip(names, combo):
            weight = weight * coef
            choice[n] = mod
        yield weight, D.specialize(choice)


def evaluate(D: Diagram) -> Morphism:
    """The functor F on a diagram (Kirby colours expanded linearly)."""
    total = None
    for w, Dk in _kirby_expansions(D):
        f = _evaluate_single(Dk)
        total = f * w if total is None else Morphism(total.dom, total.cod, total.op + f.op * w)
    return total


def _cut_single(D: Diagram, level: int, position: int) -> Any:
    levels = validate(D)
    if levels[0] or levels[-1]:
        raise DiagramError("renormalized evaluation needs a closed diagram")
    if not 0 <= level < len(levels):
        raise DiagramError(f"cut level {level} out of range 0..{len(levels) - 1}")
    strands = levels[level]
    if not 0 <= position < len(strands):
        raise DiagramError(f"cut position {position} out of range at level {level}")
    V = strands[position]
    try:
        d = module_modified_dim(V)
    except TraceError as exc:
        raise DiagramError(f"cut edge at level {level}, position {position} is not typical: {exc}") from None
    ctx = D.ctx
    one = SparseOp.identity(1, ctx.one, ctx.dtype)
    bottom = _propagate(D, one, levels, 0, level)                       # X x 1
    top = _propagate(D, one, levels, level, len(D.slices), transpose=True)  # X x 1 (transposed covector)
    L = tensor_all(ctx, strands[:position])
    R = tensor_all(ctx, strands[position + 1:])
    # T'[v', v] = sum_{a,b} wL_a wR_b B[a v' b] T[a v b] with wL = (-1)^|a| / g_a, wR = (-1)^|b| g_b
    wl = L.parity_signs() * L.pivot_values(inverse=True)
    wr = trace_weights(R)
    nv, nr = V.dim, R.dim
    res = np.zeros((nv, nv), dtype=ctx.dtype)
    if ctx.dtype == object:
        res[:] = ctx.zero
    bidx = {}
    for r, v in zip(bottom.rows, bottom.vals):
        a, rest = divmod(int(r), nv * nr)
        vp, b = divmod(rest, nr)
        bidx.setdefault((a, b), []).append((vp, v))
    for r, v in zip(top.rows, top.vals):
        a, rest = divmod(int(r), nv * nr)
        vv, b = divmod(rest, nr)
        for vp, bv in bidx.get((a, b), ()):
            res[vp, vv] = res[vp, vv] + wl[a] * wr[b] * bv * v
    T = Morphism(V, V, SparseOp.from_dense(res) if _any_nonzero(res) else SparseOp.zeros((nv, nv), ctx.dtype))
    return d * T.scalar()


def _any_nonzero(a: np.ndarray) -> bool:
    return any(x != 0 for x in a.ravel())


def evaluate_renormalized(D: Diagram, cut: tuple[int, int]) -> Any:
    """F': open the closed diagram at strand ``cut = (level, position)`` and take ``d(V) <T'>``.

    ``level`` counts boundaries between slices (0 is below the first slice).
    """
    level, position = cut
    total = D.ctx.zero
    for w, Dk in _kirby_expansions(D):
        total = total + w * _cut_single(Dk, level, position)
    return total


# ---------------------------------------------------------------------------
# builders


def _ids(*refs: str) -> list[Atom]:
    return [atom("id", r) for r in refs]


def unknot_diagram(V: ModuleObject, framing: int = 0) -> Diagram:
    """0- or +-1-framed unknot coloured ``V``; cut at ``(1, 0)``."""
    mid = []
    if framing:
        mid = [[atom("twist_pos" if framing > 0 else "twist_neg", "V"), atom("id", "V*")]]
    return Diagram(V.ctx, {"V": V}, [[atom("coev_left", "V")], *mid, [atom("ev_right", "V")]])


def meridian_diagram(W: ModuleObject, V: Any, framing: int = 0, mirror: bool = False) -> Diagram:
    """A ``V``-coloured circle around an upward ``W`` strand, as an endomorphism of ``W``.

    ``framing`` adds a twist on the circle; ``mirror`` uses negative crossings.
    """
    br = "braid_neg" if mirror else "braid_pos"
    slices = [[atom("id", "W"), atom("coev_left", "V")]]
    if framing:
        slices.append([atom("id", "W"), atom("twist_pos" if framing > 0 else "twist_neg", "V"), atom("id", "V*")])
    slices += [
        [atom(br, "W", "V"), atom("id", "V*")],
        [atom(br, "V", "W"), atom("id", "V*")],
        [atom("id", "W"), atom("ev_right", "V")],
    ]
    return Diagram(W.ctx, {"W": W, "V": V}, slices)


def hopf_diagram(V: ModuleObject, W: ModuleObject) -> Diagram:
    """Closed Hopf link: a ``V`` circle around a closed ``W`` component.

    Cut ``(1, 0)`` opens the W component, cut ``(2, 1)`` the V component.
    """
    return Diagram(V.ctx, {"V": V, "W": W}, [
        [atom("coev_left", "W")],
        [atom("id", "W"), atom("coev_left", "V"), atom("id", "W*")],
        [atom("braid_pos", "W", "V"), *_ids("V*", "W*")],
        [atom("braid_pos", "V", "W"), *_ids("V*", "W*")],
        [atom("id", "W"), atom("ev_right", "V"), atom("id", "W*")],
        [atom("ev_right", "W")],
    ])


def connected_sum_hopf_diagram(V: ModuleObject, W1: ModuleObject, W2: ModuleObject) -> Diagram:
    """``Hopf(W1, V) #_V Hopf(W2, V)``: a closed ``V`` component with two meridians.

    Cut ``(1, 0)`` opens the V component.
    """
    return Diagram(V.ctx, {"V": V, "A": W1, "B": W2}, [
        [atom("coev_left", "V")],
        [atom("id", "V"), atom("coev_left", "A"), atom("id", "V*")],
        [atom("braid_pos", "V", "A"), *_ids("A*", "V*")],
        [atom("braid_pos", "A", "V"), *_ids("A*", "V*")],
        [atom("id", "V"), atom("ev_right", "A"), atom("id", "V*")],
        [atom("id", "V"), atom("coev_left", "B"), atom("id", "V*")],
        [atom("braid_pos", "V", "B"), *_ids("B*", "V*")],
        [atom("braid_pos", "B", "V"), *_ids("B*", "V*")],
        [atom("id", "V"), atom("ev_right", "B"), atom("id", "V*")],
        [atom("ev_right", "V")],
    ])


def double_meridian_diagram(Vi: ModuleObject, Vj: ModuleObject, circle: Any) -> Diagram:
    """Open graph for ``f_ij``: a circle around an upward ``Vi`` and a downward ``Vj`` strand.

    The result is an endomorphism of ``Vi (x) Vj*``.
    """
    return Diagram(Vi.ctx, {"A": Vi, "B": Vj, "K": circle}, [
        [*_ids("A", "B*"), atom("coev_left", "K")],
        [atom("id", "A"), atom("braid_pos", "B*", "K"), atom("id", "K*")],
        [atom("braid_pos", "A", "K"), *_ids("B*", "K*")],
        [atom("braid_pos", "K", "A"), *_ids("B*", "K*")],
        [atom("id", "A"), atom("braid_pos", "K", "B*"), atom("id", "K*")],
        [*_ids("A", "B*"), atom("ev_right", "K")],
    ])


def omega_double_meridian_graph(Vi: ModuleObject, circle: Any) -> Diagram:
    """Closure of the ``f_ii`` graph: two oppositely oriented ``Vi`` circles linked by ``circle``.

    Cut ``(1, 0)`` opens the first ``Vi`` circle.
    """
    return Diagram(Vi.ctx, {"A": Vi, "K": circle}, [
        [atom("coev_left", "A")],
        [*_ids("A", "A*"), atom("coev_left", "A")],
        [*_ids("A", "A*", "A"), atom("coev_left", "K"), atom("id", "A*")],
        [*_ids("A", "A*"), atom("braid_pos", "A", "K"), *_ids("K*", "A*")],
        [atom("id", "A"), atom("braid_pos", "A*", "K"), *_ids("A", "K*", "A*")],
        [atom("id", "A"), atom("braid_pos", "K", "A*"), *_ids("A", "K*", "A*")],
        [*_ids("A", "A*"), atom("braid_pos", "K", "A"), *_ids("K*", "A*")],
        [*_ids("A", "A*", "A"), atom("ev_right", "K"), atom("id", "A*")],
        [*_ids("A", "A*"), atom("ev_right", "A")],
        [atom("ev_right", "A")],
    ])


def delta_diagram(V: ModuleObject, circle: Any, sign: int) -> Diagram:
    """Kirby-coloured ``sign``-framed meridian around ``V`` with a compensating kink.

    ``sign = -1``: positive crossings, negative twists on circle and strand.
    ``sign = +1``: the mirror image.
    """
    D = meridian_diagram(V, circle, framing=sign, mirror=sign > 0)
    D.slices.append([atom("twist_pos" if sign > 0 else "twist_neg", "W")])
    return D
