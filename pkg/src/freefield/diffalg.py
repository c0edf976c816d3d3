"""Super differential polynomials: symbol algebras, jet rings, g[t]-actions.

A variable is a family label plus copy, coordinate, derivative order; its
weight is order + offset where offset is the conformal weight of the
underlying generator (0 for plain jet variables).  Polynomials are maps
from canonical sorted monomials to rationals, with odd variables
anticommuting.
"""

from __future__ import annotations

from math import factorial
from typing import NamedTuple

from .linalg import Echelon, nullspace
from .rationals import QQ, ZERO, qstr, parse_qstr
from . import fock


class DV(NamedTuple):
    """Differential variable; sort order = declaration order of fields."""

    family: str
    copy: int
    coord: int
    order: int
    parity: int
    offset: int

    @property
    def weight(self) -> int:
        return self.order + self.offset

    def bump(self, r: int = 1) -> "DV":
        return self._replace(order=self.order + r)

    def token(self) -> str:
        return f"{self.family}{self.coord}[{self.copy}]^({self.order})"


_SYMBOL_OFFSET = {"beta": 1, "gamma": 0, "b": 1, "c": 0}
_SYMBOL_PARITY = {"beta": 0, "gamma": 0, "b": 1, "c": 1}


def symbol_var(family: str, copy: int, coord: int, order: int) -> DV:
    return DV(family, copy, coord, order, _SYMBOL_PARITY[family], _SYMBOL_OFFSET[family])


def jet_var(family: str, copy: int, coord: int, order: int, parity: int = 0) -> DV:
    if family in _SYMBOL_OFFSET:
        raise ValueError(f"{family!r} is reserved for symbol variables")
    return DV(family, copy, coord, order, parity, 0)


# -- polynomial arithmetic --------------------------------------------------


def diff_zero() -> dict:
    return {}


def diff_const(c) -> dict:
    c = QQ(c)
    return {(): c} if c else {}


def monomial_from_factors(factors, coeff=1) -> dict:
    """Canonicalize a factor list with Koszul signs; odd repeats kill it."""
    c = QQ(coeff)
    if not c:
        return {}
    mono: list = []
    for v in factors:
        pos = len(mono)
        while pos > 0 and mono[pos - 1] > v:
            pos -= 1
        if v.parity:
            if (pos < len(mono) and mono[pos] == v) or (
                pos > 0 and mono[pos - 1] == v
            ):
                return {}
            crossed = sum(u.parity for u in mono[pos:]) & 1
            if crossed:
                c = -c
        mono.insert(pos, v)
    return {tuple(mono): c}


def diff_add(p: dict, q: dict) -> dict:
    out = dict(p)
    for m, c in q.items():
        s = out.get(m, ZERO) + c
        if s:
            out[m] = s
        else:
            del out[m]
    return out


def diff_scale(p: dict, c) -> dict:
    c = QQ(c)
    if not c:
        return {}
    return {m: c * v for m, v in p.items()}


def diff_sub(p: dict, q: dict) -> dict:
    return diff_add(p, diff_scale(q, -1))


def diff_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            term = monomial_from_factors(list(m1) + list(m2), c1 * c2)
            out = diff_add(out, term)
    return out


def mono_weight(mono) -> int:
    return sum(v.weight for v in mono)


def mono_degree(mono) -> int:
    return len(mono)


def diff_bidegree(p: dict):
    """(weight, degree) when homogeneous, None entries otherwise."""
    if not p:
        return 0, 0
    ws = {mono_weight(m) for m in p}
    ds = {len(m) for m in p}
    return (ws.pop() if len(ws) == 1 else None, ds.pop() if len(ds) == 1 else None)


def diff_eq(p: dict, q: dict) -> bool:
    return p == q


# -- derivation and g[t]-action ---------------------------------------------


def apply_D(p: dict) -> dict:
    """The total derivative: D(v^{(i)}) = v^{(i+1)}, even super-Leibniz."""
    out: dict = {}
    for mono, c in p.items():
        for k, v in enumerate(mono):
            factors = list(mono)
            factors[k] = v.bump()
            out = diff_add(out, monomial_from_factors(factors, c))
    return out


def jet_ideal(f_list, m: int) -> list:
    """Generators {D^i f : 0 <= i <= m} for each f, f first, i ascending."""
    for f in f_list:
        w, _ = diff_bidegree(f)
        if f and w != 0:
            raise ValueError("jet_ideal inputs must sit at jet weight 0")
    out = []
    for f in f_list:
        cur = f
        out.append(cur)
        for _ in range(m):
            cur = apply_D(cur)
            out.append(cur)
    return out


def falling(i: int, r: int) -> int:
    """lambda^r_i = i!/(i-r)! for 0 <= r <= i, else 0."""
    if r < 0 or r > i:
        return 0
    return factorial(i) // factorial(i - r)


def lie_jet_action(mats: dict, r: int, p: dict) -> dict:
    """xi t^r acting as an even derivation: v^{(i)} -> lambda^r_i (M v)^{(i-r)}.

    mats maps each variable family to the matrix of xi on that family's
    coordinate labels (column index = source coordinate, 1-based shift).
    """
    if r < 0:
        raise ValueError("need r >= 0")
    out: dict = {}
    for mono, c in p.items():
        for k, v in enumerate(mono):
            lam = falling(v.order, r)
            if not lam:
                continue
            if v.family not in mats:
                raise KeyError(f"no action matrix for family {v.family!r}")
            M = mats[v.family]
            col = v.coord - 1
            for row in range(len(M)):
                entry = M[row][col]
                if not entry:
                    continue
                factors = list(mono)
                factors[k] = v._replace(coord=row + 1, order=v.order - r)
                out = diff_add(
                    out, monomial_from_factors(factors, c * lam * entry)
                )
    return out


def action_matrices(A, xi, roles: dict) -> dict:
    """Family -> matrix table for lie_jet_action.

    roles maps family name to 'rep' (transform by rho(xi)) or 'dual'
    (transform by -rho(xi)^T)."""
    out = {}
    for fam, role in roles.items():
        if role == "rep":
            out[fam] = A.matrix_for(xi)
        elif role == "dual":
            out[fam] = A.dual_matrix(xi)
        else:
            raise ValueError(f"unknown role {role!r}")
    return out


# -- bidegree components and invariants -------------------------------------


class FamilyDecl(NamedTuple):
    family: str
    copies: int
    coords: int
    parity: int
    offset: int
    role: str  # 'rep' or 'dual'


class VarSpace:
    """Ambient polynomial ring: a list of variable families with roles."""

    def __init__(self, families):
        self.families = tuple(families)
        seen = set()
        for f in self.families:
            if f.family in seen:
                raise ValueError(f"duplicate family {f.family!r}")
            seen.add(f.family)

    def variables(self, max_weight: int) -> list:
        out = []
        for f in self.families:
            for j in range(1, f.copies + 1):
                for i in range(1, f.coords + 1):
                    for k in range(0, max_weight - f.offset + 1):
                        out.append(
                            DV(f.family, j, i, k, f.parity, f.offset)
                        )
        return sorted(out)

    def roles(self) -> dict:
        return {f.family: f.role for f in self.families}

    def action_for(self, A, xi) -> dict:
        return action_matrices(A, xi, self.roles())


def varspace_for_system(sys: fock.SystemSpec) -> VarSpace:
    fams = []
    if sys.bosonic:
        n, m = sys.bosonic
        fams.append(FamilyDecl("beta", m, n, 0, 1, "rep"))
        fams.append(FamilyDecl("gamma", m, n, 0, 0, "dual"))
    if sys.fermionic:
        n, m = sys.fermionic
        fams.append(FamilyDecl("b", m, n, 1, 1, "rep"))
        fams.append(FamilyDecl("c", m, n, 1, 0, "dual"))
    return VarSpace(fams)


def enumerate_component(space: VarSpace, weight: int, degree: int) -> list:
    """All canonical monomials of the exact bidegree, sorted."""
    vars_all = [v for v in space.variables(weight) if v.weight <= weight]
    out: list = []

    def rec(start: int, w_left: int, d_left: int, acc: list):
        if d_left == 0:
            if w_left == 0:
                out.append(tuple(acc))
            return
        for idx in range(start, len(vars_all)):
            v = vars_all[idx]
            if v.weight > w_left:
                continue
            # weight-0 variables never exhaust w_left, but degree bounds it
            if v.parity and acc and acc[-1] == v:
                continue
            acc.append(v)
            nxt = idx + 1 if v.parity else idx
            rec(nxt, w_left - v.weight, d_left - 1, acc)
            acc.pop()

    rec(0, weight, degree, [])
    return sorted(out)


class ResourceCapError(RuntimeError):
    def __init__(self, cap: int, size: int):
        super().__init__(
            f"component size {size} exceeds the configured cap {cap}"
        )
        self.cap = cap
        self.size = size


def _block_key(mono):
    counts: dict = {}
    for v in mono:
        k = (v.family, v.copy)
        counts[k] = counts.get(k, 0) + 1
    return tuple(sorted(counts.items()))


def invariant_basis(space: VarSpace, A, weight: int, maxdeg: int, cap: int = 20000):
    """Exact basis of the joint kernel of {xi t^r : xi basis, 0 <= r <= weight}
    on the (weight, degree <= maxdeg) component.

    The action never moves a factor across families or copies, so the
    component splits into blocks by per-(family, copy) factor counts; each
    block is solved by exact sparse elimination.  Output order: degree
    ascending, then block key, then canonical nullspace order.
    """
    actions = [space.action_for(A, i) for i in range(A.dim)]
    basis_out = []
    for d in range(0, maxdeg + 1):
        monos = enumerate_component(space, weight, d)
        if len(monos) > cap:
            raise ResourceCapError(cap, len(monos))
        blocks: dict = {}
        for m in monos:
            blocks.setdefault(_block_key(m), []).append(m)
        for key in sorted(blocks):
            cols = sorted(blocks[key])
            equations = []
            for mats in actions:
                for r in range(0, weight + 1):
                    rows: dict = {}
                    for ci, mono in enumerate(cols):
                        img = lie_jet_action(mats, r, {mono: QQ(1)})
                        for tmono, c in img.items():
                            rows.setdefault(tmono, {})[ci] = c
                    equations.extend(rows[t] for t in sorted(rows))
            for vec in nullspace(equations, list(range(len(cols)))):
                basis_out.append({cols[i]: c for i, c in vec.items()})
    return basis_out


def generated_span(gens, weight: int, maxdeg: int, cap: int = 20000):
    """Canonical basis of the span of all products of D-derivatives of the
    gens at bidegree (weight, degree <= maxdeg)."""
    info = []
    for g in gens:
        w, d = diff_bidegree(g)
        if w is None or d is None:
            raise ValueError("generated_span needs bihomogeneous generators")
        if g:
            info.append((w, d, g))
    # derivative closure D^k g while the weight fits
    derived = []
    for w, d, g in info:
        cur = g
        for k in range(0, weight - w + 1):
            if d <= maxdeg and w + k <= weight:
                derived.append((w + k, d, cur))
            cur = apply_D(cur)
    products: list = []

    def rec(start: int, w_left: int, d_left: int, acc):
        if w_left == 0 and acc:
            products.append(list(acc))
        if d_left <= 0:
            return
        for idx in range(start, len(derived)):
            w, d, g = derived[idx]
            if w > w_left or d > d_left:
                continue
            acc.append(idx)
            rec(idx, w_left - w, d_left - d, acc)
            acc.pop()

    rec(0, weight, maxdeg, [])
    if weight == 0:
        products.append([])  # the empty product: constants
    ech = Echelon()
    count = 0
    for prod in products:
        poly = diff_const(1)
        for idx in prod:
            poly = diff_mul(poly, derived[idx][2])
        count += 1
        if count > cap:
            raise ResourceCapError(cap, count)
        if poly:
            ech.add(dict(poly))
    return [dict(r) for r in ech.reduced_rows()]


# -- normal ordering and quantum correction ---------------------------------


def normal_order(p: dict, sys: fock.SystemSpec) -> fock.State:
    """Replace each symbol monomial by the right-nested Wick product of
    d^k-generators in the monomial's canonical order."""
    out = fock.zero(sys)
    for mono, c in p.items():
        if not mono:
            out = out.add(fock.vacuum(sys).scale(c))
            continue
        factors = []
        for v in mono:
            if v.family not in _SYMBOL_OFFSET or v.offset != _SYMBOL_OFFSET[v.family]:
                raise ValueError(f"non-symbol variable {v.token()}")
            st = fock.generator_state(sys, v.family, v.copy, v.coord)
            for _ in range(v.order):
                st = fock.derivative(st)
            factors.append(st)
        out = out.add(fock.wick(factors).scale(c))
    return out


class QCResult(NamedTuple):
    status: str          # 'ok' or 'failed'
    total: dict          # accumulated abstract polynomial p - sum corrections
    corrections: tuple   # ((degree, abstract polynomial), ...) as applied
    failed_degree: int | None
    residual_symbol: dict | None


def _abstract_var(name: str, order: int, parity: int, weight: int) -> DV:
    return DV(name, 0, 0, order, parity, weight)


def quantum_correct(p: dict, gens, sys: fock.SystemSpec, cap: int = 20000) -> QCResult:
    """Descent turning a classical relation into an identically zero field.

    p is a polynomial in abstract generator variables (family = generator
    name, order = number of D's applied).  gens is a list of
    (name, symbol DiffPoly, State).  Checks that substituting the symbols
    into p gives zero, then repeatedly normal-orders and subtracts until
    the state vanishes, or fails at a degree whose symbol is not a
    polynomial in the generators' symbols and D-derivatives.
    """
    by_name = {}
    for name, sym, st in gens:
        w, d = diff_bidegree(sym)
        par = fock.parity_of(st)
        if w is None or d is None or par is None:
            raise ValueError(f"generator {name!r} must be bihomogeneous")
        by_name[name] = (sym, st, w, d, par)

    def substitute(poly: dict) -> dict:
        out = diff_zero()
        for mono, c in poly.items():
            term = diff_const(c)
            for v in mono:
                sym = by_name[v.family][0]
                img = sym
                for _ in range(v.order):
                    img = apply_D(img)
                term = diff_mul(term, img)
            out = diff_add(out, term)
        return out

    def engine_bidegree(poly: dict):
        ws, ds = set(), set()
        for mono in poly:
            ws.add(sum(v.weight for v in mono))
            ds.add(sum(by_name[v.family][3] for v in mono))
        if len(ws) != 1 or len(ds) != 1:
            raise ValueError("relation must be bihomogeneous over the generators")
        return ws.pop(), ds.pop()

    def normal_order_abstract(poly: dict) -> fock.State:
        out = fock.zero(sys)
        for mono, c in poly.items():
            if not mono:
                out = out.add(fock.vacuum(sys).scale(c))
                continue
            factors = []
            for v in mono:
                st = by_name[v.family][1]
                for _ in range(v.order):
                    st = fock.derivative(st)
                factors.append(st)
            out = out.add(fock.wick(factors).scale(c))
        return out

    if not p:
        return QCResult("ok", {}, (), None, None)

    check = substitute(p)
    if check:
        raise ValueError("p is not a classical relation: symbols do not cancel")
    w_total, d_total = engine_bidegree(p)

    names = sorted(by_name)

    def expression_basis(wq: int, dq: int):
        """Abstract monomials in D^k-generators at engine bidegree (wq, dq)."""
        items = []
        for name in names:
            _, _, w, d, par = by_name[name]
            for k in range(0, wq - w + 1):
                items.append((name, k, w + k, d, par))
        found: list = []

        def rec(start, w_left, d_left, acc):
            if w_left == 0 and d_left == 0:
                found.append(tuple(acc))
                return
            if d_left <= 0:
                return
            for idx in range(start, len(items)):
                name, k, w, d, par = items[idx]
                if w > w_left or d > d_left:
                    continue
                if par and acc and acc[-1] == (name, k):
                    continue
                acc.append((name, k))
                rec(idx, w_left - w, d_left - d, acc)
                acc.pop()

        rec(0, wq, dq, [])
        return found

    corrections = []
    total = dict(p)
    q = normal_order_abstract(p)
    prev_deg = d_total
    guard = 0
    while not q.is_zero():
        guard += 1
        if guard > d_total + 2:
            raise AssertionError("descent failed to terminate")
        _, _, dq = fock.gradings(q)
        assert dq < prev_deg, "descent must strictly lower the degree"
        prev_deg = dq
        s = fock.symbol(q, dq)
        ech = Echelon(track=True)
        tags = {}
        n_prods = 0
        for prod in expression_basis(w_total, dq):
            poly = diff_const(1)
            for name, k in prod:
                sym = by_name[name][0]
                for _ in range(k):
                    sym = apply_D(sym)
                poly = diff_mul(poly, sym)
            n_prods += 1
            if n_prods > cap:
                raise ResourceCapError(cap, n_prods)
            if poly:
                tags[prod] = poly
                ech.add(dict(poly), tag=prod)
        combo = ech.express(dict(s))
        if combo is None:
            return QCResult("failed", total, tuple(corrections), dq, s)
        r = diff_zero()
        for prod, c in combo.items():
            factors = [
                _abstract_var(
                    name, k, by_name[name][4], by_name[name][2]
                )
                for name, k in prod
            ]
            r = diff_add(r, monomial_from_factors(factors, c))
        corrections.append((dq, r))
        total = diff_sub(total, r)
        q = q.sub(normal_order_abstract(r))

    # re-expansion check: the accumulated expression is identically zero
    assert normal_order_abstract(total).is_zero()
    return QCResult("ok", total, tuple(corrections), None, None)


# -- serialization ----------------------------------------------------------


def diff_to_text(p: dict) -> str:
    if not p:
        return "0"
    parts = []
    for mono in sorted(p):
        c = p[mono]
        facs = " ".join(v.token() for v in mono) if mono else "1"
        parts.append(f"{qstr(c)} * {facs}")
    return " + ".join(parts)


def diff_from_text(text: str, families: dict) -> dict:
    """Parse diff_to_text output; families maps name -> (parity, offset)."""
    text = text.strip()
    if text == "0":
        return {}
    out = diff_zero()
    for part in text.split(" + "):
        coeff_txt, facs_txt = part.split(" * ", 1)
        c = parse_qstr(coeff_txt)
        factors = []
        if facs_txt.strip() != "1":
            for tok in facs_txt.split():
                # name+coord [copy] ^(order): e.g. beta2[1]^(3)
                name_part, rest = tok.split("[", 1)
                copy_txt, order_part = rest.split("]^(", 1)
                order = int(order_part[:-1])
                fam = name_part.rstrip("0123456789")
                coord = int(name_part[len(fam):])
                parity, offset = families[fam]
                factors.append(DV(fam, int(copy_txt), coord, order, parity, offset))
        out = diff_add(out, monomial_from_factors(factors, c))
    return out
