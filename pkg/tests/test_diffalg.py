import pytest

from freefield.constructions import build_system, det_family, theta
from freefield.diffalg import (
    FamilyDecl, ResourceCapError, VarSpace, _abstract_var, action_matrices,
    apply_D, diff_add, diff_bidegree, diff_const, diff_eq, diff_from_text,
    diff_mul, diff_sub, diff_to_text, diff_zero, enumerate_component,
    generated_span, invariant_basis, jet_var, lie_jet_action,
    monomial_from_factors, normal_order, quantum_correct, symbol_var,
    varspace_for_system,
)
from freefield.fock import gradings, monomial_state, nth_product, symbol
from freefield.liealg import make_algebra
from freefield.rationals import QQ


def test_odd_variables_anticommute():
    t1 = jet_var("t", 1, 1, 0, parity=1)
    t2 = jet_var("t", 1, 2, 0, parity=1)
    p = monomial_from_factors([t1])
    q = monomial_from_factors([t2])
    assert diff_eq(diff_mul(p, q), diff_sub(diff_zero(), diff_mul(q, p)))
    assert not diff_mul(p, p)
    # engine symbol families are reserved
    with pytest.raises(ValueError):
        jet_var("b", 1, 1, 0, parity=1)


def test_apply_D_leibniz_and_weight():
    x = monomial_from_factors([jet_var("x", 1, 1, 0)])
    y = monomial_from_factors([jet_var("x", 2, 1, 0)])
    lhs = apply_D(diff_mul(x, y))
    rhs = diff_add(diff_mul(apply_D(x), y), diff_mul(x, apply_D(y)))
    assert diff_eq(lhs, rhs)
    w0, d0 = diff_bidegree(diff_mul(x, y))
    w1, d1 = diff_bidegree(lhs)
    assert (w1, d1) == (w0 + 1, d0)


def test_lie_jet_action_matches_engine_symbol():
    sys = build_system(bosonic=(2, 1))
    A = make_algebra("sl", 2)
    F = theta(A, sys, side="left")
    space = varspace_for_system(sys)
    v = monomial_state(sys, [(sys.gen("beta", 1, 1).index, -2),
                             (sys.gen("gamma", 1, 2).index, -1)])
    _, _, dv = gradings(v)
    sv = symbol(v, dv)
    for idx in range(A.dim):
        for r in (0, 1, 2):
            lhs = symbol(nth_product(F.states[idx], v, r), dv)
            rhs = lie_jet_action(space.action_for(A, idx), r, sv)
            assert diff_eq(lhs, rhs), (idx, r)


def test_invariant_basis_plain_sl2_minors():
    # four copies of the sl2-defining rep: weight-0 invariants are spanned
    # by the six 2x2 minors
    space = VarSpace([FamilyDecl("x", 4, 2, 0, 0, "rep")])
    A = make_algebra("sl", 2)
    inv0 = invariant_basis(space, A, 0, 2)
    assert len([p for p in inv0 if diff_bidegree(p)[1] == 2]) == 6


def test_generated_span_counts_bihomogeneous():
    x11 = monomial_from_factors([jet_var("x", 1, 1, 0)])
    x21 = monomial_from_factors([jet_var("x", 2, 1, 0)])
    minor = diff_sub(diff_mul(x11, apply_D(x21)), diff_mul(x21, apply_D(x11)))
    span = generated_span([minor], 2, 4)
    dims = {}
    for p in span:
        w, d = diff_bidegree(p)
        dims[(w, d)] = dims.get((w, d), 0) + 1
    # weight-2 span of {minor}: D(minor) at degree 2 and minor*minor at 4
    assert dims == {(2, 2): 1, (2, 4): 1}


def test_enumerate_component_counts():
    space = VarSpace([FamilyDecl("x", 1, 1, 0, 0, "rep")])
    # exact bidegree components in x, Dx, D^2x, ...
    assert len(enumerate_component(space, 0, 3)) == 1  # x^3 only
    comp = enumerate_component(space, 2, 2)
    assert len(comp) == 2  # x D^2x and (Dx)^2
    for mono in comp:
        assert sum(v.order for v in mono) == 2 and len(mono) == 2


def test_resource_cap():
    space = VarSpace([FamilyDecl("x", 3, 3, 0, 0, "rep")])
    A = make_algebra("gl", 3)
    with pytest.raises(ResourceCapError):
        invariant_basis(space, A, 3, 6, cap=5)


def test_normal_order_round_trip():
    sys = build_system(bosonic=(2, 1))
    p = diff_mul(monomial_from_factors([symbol_var("beta", 1, 1, 0)]),
                 monomial_from_factors([symbol_var("gamma", 1, 2, 1)]))
    st = normal_order(p, sys)
    _, _, d = gradings(st)
    assert diff_eq(symbol(st, d), p)


def test_quantum_correct_trivial_relation():
    sys = build_system(bosonic=(1, 1))
    D = det_family(sys, (1,), side="beta")
    Dp = det_family(sys, (1,), side="gamma")
    F = theta(make_algebra("gl", 1), sys, side="right")
    q_state = F.states[0]
    gens = [("d", symbol(D, 1), D), ("dp", symbol(Dp, 1), Dp),
            ("q", symbol(q_state, 2), q_state)]
    p = diff_sub(
        diff_mul(monomial_from_factors([_abstract_var("d", 0, 0, 1)]),
                 monomial_from_factors([_abstract_var("dp", 0, 0, 0)])),
        monomial_from_factors([_abstract_var("q", 0, 0, 1)]))
    res = quantum_correct(p, gens, sys)
    assert res.status == "ok" and res.corrections == ()
    assert diff_eq(res.total, p)


def test_quantum_correct_rejects_non_relation():
    sys = build_system(bosonic=(1, 1))
    D = det_family(sys, (1,), side="beta")
    gens = [("d", symbol(D, 1), D)]
    p = monomial_from_factors([_abstract_var("d", 0, 0, 1)])
    with pytest.raises(ValueError):
        quantum_correct(p, gens, sys)


def test_action_matrices_roles():
    A = make_algebra("sl", 2)
    mats = action_matrices(A, 0, {"beta": "rep", "gamma": "dual"})
    assert set(mats) == {"beta", "gamma"}
    M, Md = mats["beta"], mats["gamma"]
    # dual action is minus transpose
    for r in range(2):
        for c in range(2):
            assert Md[r][c] == -M[c][r]


def test_text_round_trip():
    p = diff_add(
        monomial_from_factors([jet_var("x", 1, 1, 0), jet_var("x", 2, 1, 1)],
                              QQ(-2, 3)),
        diff_const(QQ(5)))
    fams = {"x": (0, 0)}
    assert diff_eq(diff_from_text(diff_to_text(p), fams), p)
