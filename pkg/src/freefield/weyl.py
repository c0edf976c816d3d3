"""
Exact Weyl algebra on a matrix of variables x'[i,j] with the Bernstein
filtration, the classical infinitesimal actions (left on coordinates,
right on copies, and the quadratic pairing families), commutative
determinants, and zero-mode checks connecting Fock states to their
classical counterparts.
"""

from itertools import product as iproduct

from .rationals import QQ, ZERO, ONE, qstr, parse_qstr
from .fock import State, nth_product, monomial_state, mono_weight


# A WeylElement is a dict {(alpha, beta): QQ} where alpha and beta are
# sorted tuples of variable keys (i, j) with repetition: the normal-form
# monomial x'^alpha d^beta, all x' factors left of all d factors.


def weyl_zero() -> dict:
    return {}


def weyl_const(c) -> dict:
    c = QQ(c)
    return {((), ()): c} if c else {}


def weyl_term(c, alpha=(), beta=()) -> dict:
    c = QQ(c)
    return {(tuple(sorted(alpha)), tuple(sorted(beta))): c} if c else {}


def weyl_var(i: int, j: int) -> dict:
    return weyl_term(ONE, alpha=((i, j),))


def weyl_d(i: int, j: int) -> dict:
    return weyl_term(ONE, beta=((i, j),))


def weyl_add(*ws) -> dict:
    out: dict = {}
    for w in ws:
        for mono, c in w.items():
            s = out.get(mono, ZERO) + c
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
    return out


def weyl_scale(w: dict, c) -> dict:
    c = QQ(c)
    if not c:
        return {}
    return {mono: v * c for mono, v in w.items()}


def weyl_sub(u: dict, v: dict) -> dict:
    return weyl_add(u, weyl_scale(v, QQ(-1)))


def _counts(tup) -> dict:
    out: dict = {}
    for v in tup:
        out[v] = out.get(v, 0) + 1
    return out


def _tup(counts) -> tuple:
    out = []
    for v in sorted(counts):
        out.extend([v] * counts[v])
    return tuple(out)


def _falling(a: int, k: int) -> int:
    r = 1
    for t in range(k):
        r *= a - t
    return r


def _binom(a: int, k: int) -> int:
    if k < 0 or k > a:
        return 0
    r = 1
    for t in range(k):
        r = r * (a - t) // (t + 1)
    return r


def normal_form_product(u: dict, v: dict) -> dict:
    """Associative product with all x' moved left of all d:
    d^b x'^a = sum_k prod_v binom(b_v,k_v) * a_v!/(a_v-k_v)! x'^{a-k} d^{b-k}.
    """
    out: dict = {}
    for (a1, b1), c1 in u.items():
        bc = _counts(b1)
        for (a2, b2), c2 in v.items():
            ac = _counts(a2)
            shared = [v_ for v_ in bc if v_ in ac]
            ranges = [range(min(bc[v_], ac[v_]) + 1) for v_ in shared]
            for ks in iproduct(*ranges):
                coeff = c1 * c2
                na, nb = dict(ac), dict(bc)
                for v_, k in zip(shared, ks):
                    if k:
                        coeff *= _binom(bc[v_], k) * _falling(ac[v_], k)
                        na[v_] -= k
                        nb[v_] -= k
                if not coeff:
                    continue
                alpha = tuple(sorted(a1 + _tup(na)))
                beta = tuple(sorted(_tup(nb) + b2))
                s = out.get((alpha, beta), ZERO) + coeff
                if s:
                    out[(alpha, beta)] = s
                else:
                    del out[(alpha, beta)]
    return out


def weyl_commutator(u: dict, v: dict) -> dict:
    return weyl_sub(normal_form_product(u, v), normal_form_product(v, u))


def bernstein_degree(w: dict) -> int:
    """Total degree in variables plus derivatives; 0 for the zero element."""
    if not w:
        return 0
    return max(len(a) + len(b) for a, b in w)


def weyl_eq(u: dict, v: dict) -> bool:
    return not weyl_sub(u, v)


def apply_weyl(w: dict, q: dict) -> dict:
    """Operator w acting on the polynomial q (pure x' element); terms with
    leftover derivatives annihilate the constant 1 and drop out."""
    for a, b in q:
        if b:
            raise ValueError("polynomial argument must be derivative-free")
    full = normal_form_product(w, q)
    return {mono: c for mono, c in full.items() if not mono[1]}


def weyl_to_text(w: dict) -> str:
    """Canonical text: terms sorted, "p/q * x'[i,j]^a d[i,j]^b"."""
    if not w:
        return "0"
    parts = []
    for alpha, beta in sorted(w):
        c = w[(alpha, beta)]
        facs = []
        for name, tup in (("x'", alpha), ("d", beta)):
            cnt = _counts(tup)
            for (i, j) in sorted(cnt):
                e = cnt[(i, j)]
                facs.append(f"{name}[{i},{j}]" + (f"^{e}" if e > 1 else ""))
        parts.append(f"{qstr(c)} * " + (" ".join(facs) if facs else "1"))
    return " + ".join(parts)


def weyl_from_text(text: str) -> dict:
    text = text.strip()
    if text == "0":
        return {}
    out: dict = {}
    for part in text.split(" + "):
        coeff_txt, facs_txt = part.split(" * ", 1)
        c = parse_qstr(coeff_txt)
        alpha, beta = [], []
        if facs_txt.strip() != "1":
            for tok in facs_txt.split():
                if "^" in tok:
                    tok, etxt = tok.split("^")
                    e = int(etxt)
                else:
                    e = 1
                name, inner = tok.split("[")
                i, j = (int(t) for t in inner[:-1].split(","))
                (alpha if name == "x'" else beta).extend([(i, j)] * e)
        mono = (tuple(sorted(alpha)), tuple(sorted(beta)))
        s = out.get(mono, ZERO) + c
        if s:
            out[mono] = s
        else:
            out.pop(mono, None)
    return out


# -- classical actions -------------------------------------------------------


def tau_maps(A, shape, side: str = "left"):
    """WeylElements realizing A on an n x m matrix of variables, aligned
    with A.labels.

    side "left": tau(xi) = -sum_{i,i',j} rho(xi)_{i'i} x'[i,j] d[i',j].
    side "right": gl acts on the copy index, tau'(eta) = sum x'[i,a] d[i,b];
    sp (block basis) maps to M / Delta / E + (n/2)delta; so_split maps to
    the split S / D / E + (n/2)delta pattern, n the coordinate count.
    """
    n, m = shape
    out = []
    if side == "left":
        if A.rep_dim != n:
            raise ValueError("left action needs rep dimension = coordinate count")
        for M in A.rep:
            w = weyl_zero()
            for j in range(1, m + 1):
                for i in range(n):
                    for ip in range(n):
                        c = M[ip][i]
                        if c:
                            w = weyl_add(w, weyl_term(-c, alpha=((i + 1, j),),
                                                      beta=((ip + 1, j),)))
            out.append(w)
        return out
    if side != "right":
        raise ValueError(f"unknown side {side!r}")
    if A.kind == "gl":
        if A.rep_dim != m:
            raise ValueError("right action needs rep dimension = copy count")
        for lab in A.labels:
            a, b = (int(t) for t in lab[2:-1].split(","))
            w = weyl_zero()
            for i in range(1, n + 1):
                w = weyl_add(w, weyl_term(ONE, alpha=((i, a),), beta=((i, b),)))
            out.append(w)
        return out
    if A.kind == "sp":
        if A.rep_dim != 2 * m:
            raise ValueError("sp family needs rep dimension = 2 * copy count")
        for lab in A.labels:
            kind, rest = lab.split("[")
            j, k = (int(t) for t in rest.rstrip("]").split(","))
            w = weyl_zero()
            for i in range(1, n + 1):
                if kind == "m":
                    w = weyl_add(w, weyl_term(ONE, alpha=((i, j), (i, k))))
                elif kind == "d":
                    w = weyl_add(w, weyl_term(ONE, beta=((i, j), (i, k))))
                else:
                    w = weyl_add(w, weyl_term(ONE, alpha=((i, j),), beta=((i, k),)))
            if kind == "h" and j == k:
                w = weyl_add(w, weyl_const(QQ(n, 2)))
            out.append(w)
        return out
    if A.kind == "so_split":
        if A.rep_dim != 2 * m or n % 2:
            raise ValueError("split family needs even coordinates and "
                             "rep dimension = 2 * copy count")
        half = n // 2
        for lab in A.labels:
            kind, rest = lab.split("[")
            j, k = (int(t) for t in rest.rstrip("]").split(","))
            w = weyl_zero()
            if kind in ("s", "d"):
                for i in range(1, half + 1):
                    if kind == "s":
                        w = weyl_add(w, weyl_term(ONE, alpha=((i, j), (i + half, k))))
                        w = weyl_add(w, weyl_term(-ONE, alpha=((i + half, j), (i, k))))
                    else:
                        w = weyl_add(w, weyl_term(ONE, beta=((i, j), (i + half, k))))
                        w = weyl_add(w, weyl_term(-ONE, beta=((i + half, j), (i, k))))
            else:
                for i in range(1, n + 1):
                    w = weyl_add(w, weyl_term(ONE, alpha=((i, j),), beta=((i, k),)))
                if j == k:
                    w = weyl_add(w, weyl_const(QQ(half)))
            out.append(w)
        return out
    raise ValueError(f"no right family for kind {A.kind!r}")


def _perm_sign(perm) -> int:
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def classical_dets(shape, J, primed: bool = False) -> dict:
    """Commutative n x n determinant over the copies in J: pure x' columns
    (primed False) or pure derivative columns (primed True)."""
    from itertools import permutations
    n, m = shape
    J = tuple(J)
    if len(set(J)) != len(J):
        raise ValueError(f"repeated index in {J}")
    if len(J) != n:
        raise ValueError(f"need {n} distinct copies, got {len(J)}")
    out = weyl_zero()
    for perm in permutations(range(n)):
        vars_ = tuple((r + 1, J[perm[r]]) for r in range(n))
        if primed:
            t = weyl_term(QQ(_perm_sign(perm)), beta=vars_)
        else:
            t = weyl_term(QQ(_perm_sign(perm)), alpha=vars_)
        out = weyl_add(out, t)
    return out


def weyl_invariance(w: dict, taus, labels=None):
    """True iff w commutes with every listed operator; on failure returns
    (False, (label, commutator))."""
    for idx, t in enumerate(taus):
        c = weyl_commutator(t, w)
        if c:
            lab = labels[idx] if labels else idx
            return False, (lab, c)
    return True, None


# -- Zhu-side checks ---------------------------------------------------------


def poly_monomials(shape, maxdeg: int):
    """All x'-monomials of degree <= maxdeg as WeylElements, sorted."""
    n, m = shape
    vars_ = [(i, j) for j in range(1, m + 1) for i in range(1, n + 1)]
    vars_.sort()
    monos = [()]
    for _ in range(maxdeg):
        fresh = []
        for mo in monos:
            last = mo[-1] if mo else min(vars_)
            for v in vars_:
                if v >= last:
                    fresh.append(mo + (v,))
        monos = sorted(set(monos) | set(fresh))
    return [weyl_term(ONE, alpha=mo) for mo in monos]


def encode_polynomial(sys, q: dict) -> State:
    """x'^alpha -> product of gamma(-1) modes; x'[i,j] is the coordinate i
    of copy j."""
    if sys.fermionic:
        raise ValueError("polynomial encoding needs a pure betagamma system")
    total = State(sys, {})
    for (alpha, beta), c in q.items():
        if beta:
            raise ValueError("only derivative-free polynomials encode")
        modes = [(sys.gen("gamma", j, i).index, -1) for (i, j) in alpha]
        total = total.add(monomial_state(sys, modes, c))
    return total


def decode_polynomial(a: State) -> dict:
    out: dict = {}
    sys = a.sys
    for mono, c in a.terms.items():
        alpha = []
        for gi, mm in mono:
            g = sys.generators[gi]
            if g.family != "gamma" or mm != -1:
                raise ValueError("state is not a polynomial in the coordinates")
            alpha.append((g.coord, g.copy))
        key = (tuple(sorted(alpha)), ())
        out[key] = out.get(key, ZERO) + c
    return {k: v for k, v in out.items() if v}


def zhu_zero_mode(a: State, q: dict) -> dict:
    """Zero-mode action of a on the polynomial q: encode q as a weight-0
    state, act by the mode a(wt-1) per weight-homogeneous component of a,
    decode.  Output failing to be weight 0 indicates an engine bug and
    raises."""
    sys = a.sys
    enc = encode_polynomial(sys, q)
    comps: dict = {}
    for mono, c in a.terms.items():
        comps.setdefault(mono_weight(sys, mono), {})[mono] = c
    total = State(sys, {})
    for w, terms in sorted(comps.items()):
        total = total.add(nth_product(State(sys, terms), enc, w - 1))
    return decode_polynomial(total)


def zhu_products(a: State, b: State):
    """(star, circ) with star = sum_j binom(m,j) a o_{j-1} b and
    circ = sum_j binom(m,j) a o_{j-2} b, m the weight of a."""
    from .fock import state_weight, binom
    m = state_weight(a)
    star = State(a.sys, {})
    circ = State(a.sys, {})
    for j in range(0, m + 1):
        c = binom(m, j)
        if c:
            star = star.add(nth_product(a, b, j - 1).scale(c))
            circ = circ.add(nth_product(a, b, j - 2).scale(c))
    return star, circ


def measure_zero_mode_shift(F, taus, shape, maxdeg: int):
    """Compare the zero-mode action of each family current against its
    classical operator on all monomials of degree <= maxdeg.  The gap must
    be a constant multiple of the identity; the constants are measured and
    returned, never assumed.  Returns (ok, {label: QQ}, witness)."""
    shifts = {}
    for (lab, th), t in zip(F.items(), taus):
        shift = None
        for q in poly_monomials(shape, maxdeg):
            got = zhu_zero_mode(th, q)
            want = apply_weyl(t, q)
            diff = weyl_sub(got, want)
            if not diff:
                cur = ZERO
            elif set(diff) == set(q):
                (mono,) = diff
                cur = diff[mono] / q[mono]
            else:
                return False, shifts, (lab, weyl_to_text(diff))
            if shift is None:
                shift = cur
            elif shift != cur:
                return False, shifts, (lab, f"shift varies: {qstr(shift)} vs {qstr(cur)}")
        shifts[lab] = shift
    return True, shifts, None
