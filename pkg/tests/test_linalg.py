from freefield.linalg import Echelon, nullspace, rank_of, solve_affine
from freefield.rationals import QQ


def test_echelon_detects_dependence():
    ech = Echelon(track=True)
    assert ech.add({"a": QQ(1), "b": QQ(2)}, tag=0)
    assert ech.add({"b": QQ(1)}, tag=1)
    assert not ech.add({"a": QQ(2), "b": QQ(1)}, tag=2)


def test_echelon_express_recovers_combination():
    ech = Echelon(track=True)
    ech.add({"a": QQ(1), "b": QQ(1)}, tag="u")
    ech.add({"b": QQ(1), "c": QQ(1)}, tag="v")
    combo = ech.express({"a": QQ(2), "b": QQ(5), "c": QQ(3)})
    assert combo == {"u": QQ(2), "v": QQ(3)}
    assert ech.express({"c": QQ(1), "d": QQ(1)}) is None


def test_rank_of():
    rows = [{0: QQ(1), 1: QQ(1)}, {1: QQ(1)}, {0: QQ(1), 1: QQ(2)}]
    assert rank_of(rows) == 2


def test_nullspace_small_system():
    # x + y = 0, y + z = 0  ->  one-dimensional kernel (1, -1, 1)
    eqs = [{"x": QQ(1), "y": QQ(1)}, {"y": QQ(1), "z": QQ(1)}]
    basis = nullspace(eqs, ["x", "y", "z"])
    assert len(basis) == 1
    v = basis[0]
    assert v["x"] + v["y"] == 0 and v["y"] + v["z"] == 0


def test_solve_affine_feasible_and_not():
    eqs = [{"x": QQ(1), "y": QQ(1)}, {"x": QQ(1), "y": QQ(-1)}]
    sol, rank = solve_affine(eqs, [QQ(2), QQ(0)], ["x", "y"])
    assert rank == 2
    assert sol["x"] == 1 and sol["y"] == 1
    # x + y = 0 and x + y = 1 cannot both hold
    eqs = [{"x": QQ(1), "y": QQ(1)}, {"x": QQ(1), "y": QQ(1)}]
    sol, rank = solve_affine(eqs, [QQ(0), QQ(1)], ["x", "y"])
    assert sol is None and rank == 1
