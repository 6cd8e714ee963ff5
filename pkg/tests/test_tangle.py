from __future__ import annotations

import json
from fractions import Fraction

import pytest

from sl21.modularity import kirby_color
from sl21.mtrace import modified_dim, sprime_formula
from sl21.repmod import Morphism, eps_module, unit_module
from sl21.ribbon import twist
from sl21.scalar import rel_diff
from sl21.tangle import (
    Diagram,
    DiagramError,
    atom,
    connected_sum_hopf_diagram,
    evaluate,
    evaluate_renormalized,
    hopf_diagram,
    meridian_diagram,
    unknot_diagram,
    validate,
)

from conftest import MU, NU, RHO

TOL = 1e-12


def test_empty_diagram_is_unit(fast):
    f = evaluate(Diagram(fast, {}, []))
    assert f.dom.dim == 1 and f.cod.dim == 1
    assert rel_diff(f.scalar(), 1) == 0


def test_chaining_error_names_slice_and_position(V, W):
    D = Diagram(V.ctx, {"V": V, "W": W}, [[atom("id", "V")], [atom("id", "W")]])
    with pytest.raises(DiagramError, match=r"slice 1, position 0"):
        validate(D)
    D = Diagram(V.ctx, {"V": V}, [[atom("id", "V")], [atom("id", "V"), atom("id", "V")]])
    with pytest.raises(DiagramError, match=r"slice 1"):
        validate(D)


def test_duality_atom_on_dual_reference_rejected(V):
    D = Diagram(V.ctx, {"V": V}, [[atom("coev_left", "V*")]])
    with pytest.raises(DiagramError, match="dual colour"):
        validate(D)


def test_unknown_colour_and_atom(V):
    with pytest.raises(DiagramError, match="unknown colour"):
        validate(Diagram(V.ctx, {"V": V}, [[atom("id", "Q")]]))
    with pytest.raises(DiagramError):
        Diagram.from_json(V.ctx, {"colors": {}, "slices": [[["frobnicate", "V"]]]})
    with pytest.raises(DiagramError):
        Diagram.from_json(V.ctx, {"colors": {"V*": {"form": "unit"}}, "slices": []})


def test_twist_atom_matches_ribbon(V):
    D = Diagram(V.ctx, {"V": V}, [[atom("twist_pos", "V")]])
    assert (evaluate(D).op - twist(V).op).max_abs() < TOL


def test_reidemeister_moves(V, W):
    ctx = V.ctx
    r2 = Diagram(ctx, {"V": V, "W": W}, [[atom("braid_pos", "V", "W")], [atom("braid_neg", "W", "V")]])
    f = evaluate(r2)
    assert (f.op - Morphism.identity(f.dom).op).max_abs() < TOL
    tw = Diagram(ctx, {"V": V}, [[atom("twist_pos", "V")], [atom("twist_neg", "V")]])
    assert (evaluate(tw).op - Morphism.identity(V).op).max_abs() < TOL
    # a positive kink closed with ev/coev equals the twist
    kink = Diagram(ctx, {"V": V}, [
        [atom("id", "V"), atom("coev_left", "V")],
        [atom("braid_pos", "V", "V"), atom("id", "V*")],
        [atom("id", "V"), atom("ev_right", "V")],
    ])
    assert (evaluate(kink).op - twist(V).op).max_abs() < TOL


def test_closed_typical_diagrams_vanish(V, W):
    assert abs(evaluate(unknot_diagram(V)).scalar()) < TOL
    assert abs(evaluate(hopf_diagram(V, W)).scalar()) < TOL


def test_unknot_renormalized_is_d(V, fast):
    d = modified_dim(fast, MU)
    assert rel_diff(evaluate_renormalized(unknot_diagram(V), (1, 0)), d) < TOL
    assert rel_diff(evaluate_renormalized(unknot_diagram(V), (1, 1)), d) < TOL
    # the opposite duality pair gives the same circle
    D = Diagram(fast, {"V": V}, [[atom("coev_right", "V")], [atom("ev_left", "V")]])
    assert rel_diff(evaluate_renormalized(D, (1, 1)), d) < TOL
    # framing multiplies by the twist scalar
    t = twist(V).scalar()
    assert rel_diff(evaluate_renormalized(unknot_diagram(V, framing=1), (1, 0)), t * d) < TOL


def test_hopf_cut_independence(V, W, fast):
    D = hopf_diagram(V, W)
    a = evaluate_renormalized(D, (1, 0))
    b = evaluate_renormalized(D, (2, 1))
    assert rel_diff(a, b) < TOL
    assert rel_diff(a, modified_dim(fast, NU) * sprime_formula(fast, MU, NU)) < TOL


def test_connected_sum(V, W, X, fast):
    D = connected_sum_hopf_diagram(V, W, X)
    total = evaluate_renormalized(D, (1, 0))
    assert rel_diff(total, evaluate_renormalized(D, (5, 0))) < TOL
    expect = modified_dim(fast, MU) * sprime_formula(fast, NU, MU) * sprime_formula(fast, RHO, MU)
    assert rel_diff(total, expect) < TOL


def test_isotopic_presentations_of_hopf_link(V, W, fast):
    # the V circle is drawn after the W strand is closed on the other side
    alt = Diagram(fast, {"V": V, "W": W}, [
        [atom("coev_right", "W")],
        [atom("id", "W*"), atom("id", "W"), atom("coev_left", "V")],
        [atom("id", "W*"), atom("braid_pos", "W", "V"), atom("id", "V*")],
        [atom("id", "W*"), atom("braid_pos", "V", "W"), atom("id", "V*")],
        [atom("id", "W*"), atom("id", "W"), atom("ev_right", "V")],
        [atom("ev_left", "W")],
    ])
    assert rel_diff(evaluate_renormalized(alt, (1, 1)), evaluate_renormalized(hopf_diagram(V, W), (1, 0))) < TOL


def test_cut_on_atypical_edge_rejected(V, fast):
    E = eps_module(fast, (1, 0, 0))
    D = hopf_diagram(E, V)
    with pytest.raises(DiagramError, match="not typical"):
        evaluate_renormalized(D, (2, 1))
    with pytest.raises(DiagramError, match="out of range"):
        evaluate_renormalized(D, (99, 0))
    with pytest.raises(DiagramError, match="closed"):
        evaluate_renormalized(meridian_diagram(V, E), (1, 0))


def test_unit_colour_is_invisible(V, fast):
    m = evaluate(meridian_diagram(V, unit_module(fast)))
    assert (m.op - Morphism.identity(V).op).max_abs() < TOL


def test_json_round_trip_is_exact(V, fast):
    K = kirby_color(fast, (Fraction(1, 5), Fraction(2, 7)), parity=1)
    D = meridian_diagram(V, K)
    text = D.dumps()
    D2 = Diagram.loads(fast, text)
    assert D2.dumps() == text
    data = json.loads(text)
    assert data["colors"]["V"] == {"form": "kirby", "degree": ["1/5", "2/7"], "parity": 1}
    # a hand-written descriptor survives verbatim
    raw = {"colors": {"V": {"form": "typical", "mu": ["0.2", "1/7"]}}, "slices": [[["id", "V"]]]}
    assert Diagram.from_json(fast, raw).to_json() == raw


def test_kirby_colour_needs_specialising_for_atoms(V, fast):
    K = kirby_color(fast, (Fraction(1, 5), Fraction(2, 7)))
    D = meridian_diagram(V, K)
    # evaluation expands the Kirby colour as a weighted sum
    total = evaluate(D)
    expect = None
    for mod, w in K.terms:
        term = evaluate(meridian_diagram(V, mod)).op * w
        expect = term if expect is None else expect + term
    assert (total.op - expect).max_abs() < TOL * 100
