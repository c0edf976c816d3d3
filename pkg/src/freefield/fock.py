"""Exact Fock-state engine for free-field vertex superalgebras.

States are finite rational combinations of canonical creation-mode
monomials.  The state <-> field dictionary is
:d^{k1}phi_1 ... d^{kr}phi_r:  <->  k1!...kr! phi_1(-k1-1)...phi_r(-kr-1)|0>,
with monomials sorted by (generator, mode) and Koszul-sign normalized.
All circle products are computed by the iterate recursion below; weight
homogeneity of every product is asserted, not assumed.
"""

from __future__ import annotations

import os
from bisect import bisect_left
from math import factorial

from .rationals import QQ, ZERO, qstr, parse_qstr

FAMILIES = ("beta", "gamma", "b", "c")
_FAMILY_RANK = {f: i for i, f in enumerate(FAMILIES)}
_BOSONIC = {"beta": True, "gamma": True, "b": False, "c": False}
_WEIGHT = {"beta": 1, "gamma": 0, "b": 1, "c": 0}
_CHARGE = {"beta": -1, "gamma": 1, "b": -1, "c": 1}


class GeneratorId:
    """One free-field generator: family beta/gamma/b/c, copy j, coordinate i.

    Copies index tensor slots (V or its bc analogue); coordinates index a
    basis of V.  Order of construction inside SystemSpec fixes the total
    order used for canonical monomials.
    """

    __slots__ = ("family", "copy", "coord", "parity", "weight", "charge", "index")

    def __init__(self, family: str, copy: int, coord: int, index: int):
        self.family = family
        self.copy = copy
        self.coord = coord
        self.parity = 0 if _BOSONIC[family] else 1
        self.weight = _WEIGHT[family]
        self.charge = _CHARGE[family]
        self.index = index

    @property
    def slot(self) -> str:
        return ("b" if _BOSONIC[self.family] else "f") + str(self.copy)

    def token(self) -> str:
        return f"g[{self.slot},{self.family},{self.coord}]"

    def __repr__(self):
        return self.token()


class SystemSpec:
    """A free-field system: m_b bosonic copies of C^{n_b} (beta/gamma pairs)
    plus m_f fermionic copies of C^{n_f} (b/c pairs).

    Generators are enumerated in canonical order: bosonic copies first
    (beta before gamma within a copy), then fermionic copies (b before c);
    coordinates ascending inside each family block.
    """

    def __init__(self, bosonic=None, fermionic=None):
        if bosonic is None and fermionic is None:
            raise ValueError("empty system")
        self.bosonic = tuple(bosonic) if bosonic else None
        self.fermionic = tuple(fermionic) if fermionic else None
        gens: list[GeneratorId] = []
        if self.bosonic:
            n, m = self.bosonic
            if n < 1 or m < 1:
                raise ValueError("bosonic shape needs n, m >= 1")
            for j in range(1, m + 1):
                for fam in ("beta", "gamma"):
                    for i in range(1, n + 1):
                        gens.append(GeneratorId(fam, j, i, len(gens)))
        if self.fermionic:
            n, m = self.fermionic
            if n < 1 or m < 1:
                raise ValueError("fermionic shape needs n, m >= 1")
            for j in range(1, m + 1):
                for fam in ("b", "c"):
                    for i in range(1, n + 1):
                        gens.append(GeneratorId(fam, j, i, len(gens)))
        self.generators = tuple(gens)
        self._lookup = {
            (g.family, g.copy, g.coord): g.index for g in self.generators
        }
        self.parity = tuple(g.parity for g in gens)
        self.weight = tuple(g.weight for g in gens)
        self.charge = tuple(g.charge for g in gens)
        # sparse contraction table phi o_0 psi, nonzero entries only
        table: dict = {}
        partner = {"beta": "gamma", "gamma": "beta", "b": "c", "c": "b"}
        sign = {"beta": QQ(1), "gamma": QQ(-1), "b": QQ(1), "c": QQ(1)}
        for g in gens:
            other = self._lookup.get((partner[g.family], g.copy, g.coord))
            if other is not None:
                table[(g.index, other)] = sign[g.family]
        self.contraction_table = table
        self._nth_cache: dict = {}
        self._cache_cap = int(os.environ.get("FREEFIELD_CACHE_CAP", "1000000"))

    def gen(self, family: str, copy: int, coord: int) -> GeneratorId:
        key = (family, copy, coord)
        if key not in self._lookup:
            raise KeyError(f"no generator {key} in this system")
        return self.generators[self._lookup[key]]

    def contraction(self, gi: int, gj: int):
        return self.contraction_table.get((gi, gj), ZERO)

    def describe(self) -> dict:
        return {
            "bosonic": list(self.bosonic) if self.bosonic else None,
            "fermionic": list(self.fermionic) if self.fermionic else None,
        }


class State:
    """Finite map canonical monomial -> nonzero QQ; immutable by convention.

    A monomial is a tuple of modes (generator index, m <= -1) sorted
    ascending by (index, m); the empty tuple is the vacuum.
    """

    __slots__ = ("sys", "terms")

    def __init__(self, sys: SystemSpec, terms: dict | None = None):
        self.sys = sys
        self.terms = terms or {}

    def is_zero(self) -> bool:
        return not self.terms

    def scale(self, c) -> "State":
        c = QQ(c)
        if not c:
            return State(self.sys)
        return State(self.sys, {m: c * v for m, v in self.terms.items()})

    def add(self, other: "State") -> "State":
        _check_same_system(self, other)
        out = dict(self.terms)
        for m, v in other.terms.items():
            s = out.get(m, ZERO) + v
            if s:
                out[m] = s
            else:
                del out[m]
        return State(self.sys, out)

    def sub(self, other: "State") -> "State":
        return self.add(other.scale(-1))

    def __eq__(self, other):
        return (
            isinstance(other, State)
            and self.sys is other.sys
            and self.terms == other.terms
        )

    def __hash__(self):
        raise TypeError("states are not hashable")

    def __repr__(self):
        return f"State({state_to_text(self)})"


def _check_same_system(a: State, b: State):
    if a.sys is not b.sys:
        raise ValueError("states from different systems")


def vacuum(sys: SystemSpec) -> State:
    return State(sys, {(): QQ(1)})


def zero(sys: SystemSpec) -> State:
    return State(sys)


def generator_state(sys: SystemSpec, family: str, copy: int, coord: int) -> State:
    g = sys.gen(family, copy, coord)
    return State(sys, {((g.index, -1),): QQ(1)})


def binom(m: int, j: int):
    """Generalized binomial m(m-1)...(m-j+1)/j!, any integer m, j >= 0."""
    if j < 0:
        raise ValueError("binom needs j >= 0")
    num = 1
    for t in range(j):
        num *= m - t
    return QQ(num, factorial(j))


# -- monomial helpers -------------------------------------------------------


def mono_weight(sys: SystemSpec, mono) -> int:
    return sum(-m - 1 + sys.weight[gi] for gi, m in mono)


def mono_charge(sys: SystemSpec, mono) -> int:
    return sum(sys.charge[gi] for gi, m in mono)


def mono_parity(sys: SystemSpec, mono) -> int:
    return sum(sys.parity[gi] for gi, m in mono) & 1


def _insert_mode(sys: SystemSpec, mono, gi: int, m: int):
    """Sort phi(m) from the left into a canonical monomial.

    Returns (new_mono, sign) or (None, _) when an odd mode repeats.
    """
    key = (gi, m)
    pos = bisect_left(mono, key)
    odd = sys.parity[gi]
    if odd:
        if pos < len(mono) and mono[pos] == key:
            return None, 0
        crossed = sum(sys.parity[g] for g, _ in mono[:pos]) & 1
        sign = -1 if crossed else 1
    else:
        sign = 1
    return mono[:pos] + (key,) + mono[pos:], sign


def monomial_state(sys: SystemSpec, modes, coeff=1) -> State:
    """Build a state from modes given in operator order (leftmost first),
    canonicalizing with Koszul signs."""
    c = QQ(coeff)
    mono: tuple = ()
    for gi, m in reversed(list(modes)):
        if m > -1:
            raise ValueError("creation modes require m <= -1")
        mono, sign = _insert_mode(sys, mono, gi, m)
        if mono is None:
            return State(sys)
        c *= sign
    if not c:
        return State(sys)
    return State(sys, {mono: c})


# -- mode action ------------------------------------------------------------


def _apply_mode_mono(sys: SystemSpec, gi: int, m: int, mono) -> dict:
    """phi(m) applied to one canonical monomial; returns a terms dict."""
    if m <= -1:
        new, sign = _insert_mode(sys, mono, gi, m)
        if new is None:
            return {}
        return {new: QQ(sign)}
    # annihilation: push through, contracting with modes at depth -m-1
    out: dict = {}
    odd = sys.parity[gi]
    crossing = 1
    for k, (gj, p) in enumerate(mono):
        if m + p == -1:
            c = sys.contraction(gi, gj)
            if c:
                rest = mono[:k] + mono[k + 1 :]
                s = out.get(rest, ZERO) + crossing * c
                if s:
                    out[rest] = s
                else:
                    out.pop(rest, None)
        if odd and sys.parity[gj]:
            crossing = -crossing
    return out


def apply_mode(phi: GeneratorId, m: int, s: State) -> State:
    out: dict = {}
    for mono, c in s.terms.items():
        for new, v in _apply_mode_mono(s.sys, phi.index, m, mono).items():
            acc = out.get(new, ZERO) + c * v
            if acc:
                out[new] = acc
            else:
                del out[new]
    return State(s.sys, out)


# -- circle products --------------------------------------------------------


def _nth_mono(sys: SystemSpec, ma, mb, n: int) -> dict:
    """nth product of two canonical monomials, memoized on the system."""
    if not ma:
        return {mb: QQ(1)} if n == -1 else {}
    wa, wb = mono_weight(sys, ma), mono_weight(sys, mb)
    if n >= 0 and n > wa + wb - 1:
        return {}
    key = (ma, mb, n)
    cache = sys._nth_cache
    hit = cache.get(key)
    if hit is not None:
        return hit

    (gi, m0), rest = ma[0], ma[1:]
    par_phi = sys.parity[gi]
    par_rest = mono_parity(sys, rest)
    cross_sign = -1 if (par_phi and par_rest) else 1
    second_sign = QQ(-((-1) ** (m0 & 1)) * cross_sign)

    acc: dict = {}

    def accumulate(terms: dict, coeff):
        for mono, v in terms.items():
            s = acc.get(mono, ZERO) + coeff * v
            if s:
                acc[mono] = s
            else:
                del acc[mono]

    # first sum: apply_mode(phi, m0-j, nth(rest, mb, n+j)); the inner
    # product vanishes once n+j passes the weight cutoff
    w_rest = mono_weight(sys, rest)
    j_hi = w_rest + wb - 1 - n
    j = 0
    while j <= j_hi:
        inner = _nth_mono(sys, rest, mb, n + j)
        if inner:
            coeff = ((-1) ** (j & 1)) * binom(m0, j)
            for mono, v in inner.items():
                for new, u in _apply_mode_mono(sys, gi, m0 - j, mono).items():
                    s = acc.get(new, ZERO) + coeff * v * u
                    if s:
                        acc[new] = s
                    else:
                        del acc[new]
        j += 1
    assert n + j_hi + 1 > w_rest + wb - 1  # first-sum cutoff is exact

    # second sum: nth(rest, apply_mode(phi, j, mb), m0+n-j); only depths
    # present in mb can contract
    depths = sorted({-p - 1 for _, p in mb})
    for j in depths:
        if j < 0:
            continue
        hit_b = _apply_mode_mono(sys, gi, j, mb)
        if not hit_b:
            continue
        coeff = ((-1) ** (j & 1)) * binom(m0, j) * second_sign
        for mono, v in hit_b.items():
            inner = _nth_mono(sys, rest, mono, m0 + n - j)
            for new, u in inner.items():
                s = acc.get(new, ZERO) + coeff * v * u
                if s:
                    acc[new] = s
                else:
                    del acc[new]
    assert all(-p - 1 <= max(depths, default=-1) for _, p in mb)

    # every monomial of a o_n b sits in weight wa+wb-n-1 and the additive
    # charge; this is the runtime homogeneity assertion
    expected_w = wa + wb - n - 1
    expected_c = mono_charge(sys, ma) + mono_charge(sys, mb)
    for mono in acc:
        assert mono_weight(sys, mono) == expected_w
        assert mono_charge(sys, mono) == expected_c

    if len(cache) < sys._cache_cap:
        cache[key] = acc
    return acc


def nth_product(a: State, b: State, n: int) -> State:
    _check_same_system(a, b)
    sys = a.sys
    out: dict = {}
    for ma, ca in a.terms.items():
        for mb, cb in b.terms.items():
            c = ca * cb
            for mono, v in _nth_mono(sys, ma, mb, n).items():
                s = out.get(mono, ZERO) + c * v
                if s:
                    out[mono] = s
                else:
                    del out[mono]
    return State(sys, out)


def wick(factors) -> State:
    """Right-nested iterated Wick product."""
    factors = list(factors)
    if not factors:
        raise ValueError("wick needs at least one factor")
    out = factors[-1]
    for a in reversed(factors[:-1]):
        out = nth_product(a, out, -1)
    return out


def derivative(a: State) -> State:
    """Translation operator; mode-raising derivation phi(m) -> -m phi(m-1).

    Must agree with nth_product(a, vacuum, -2); the test suite checks both
    implementations against each other.

    The raised mode keeps its place in operator order: its sort key only
    drops below equal (necessarily bosonic) keys, so re-sorting never
    crosses an odd mode and the Koszul sign is +1 throughout.
    """
    sys = a.sys
    out: dict = {}
    for mono, c in a.terms.items():
        for k, (gi, m) in enumerate(mono):
            lowered = mono[:k] + mono[k + 1 :]
            key = (gi, m - 1)
            if sys.parity[gi] and key in lowered:
                continue
            pos = bisect_left(lowered, key)
            new = lowered[:pos] + (key,) + lowered[pos:]
            s = out.get(new, ZERO) + c * (-m)
            if s:
                out[new] = s
            else:
                del out[new]
    return State(sys, out)


def gradings(a: State):
    """(weight, charge, degree); weight/charge are None when inhomogeneous."""
    if a.is_zero():
        return 0, 0, 0
    sys = a.sys
    weights = {mono_weight(sys, m) for m in a.terms}
    charges = {mono_charge(sys, m) for m in a.terms}
    degree = max(len(m) for m in a.terms)
    w = weights.pop() if len(weights) == 1 else None
    c = charges.pop() if len(charges) == 1 else None
    return w, c, degree


def state_weight(a: State) -> int:
    w, _, _ = gradings(a)
    if w is None:
        raise ValueError("state is not weight-homogeneous")
    return w


def commutes(a: State, b: State):
    """All nonnegative products vanish?  Returns (True, None) or
    (False, (n, witness product)).  Products beyond wt(a)+wt(b)-1 vanish
    identically, so the check is finite."""
    wa, wb = state_weight(a), state_weight(b)
    for n in range(0, max(wa + wb, 0)):
        p = nth_product(a, b, n)
        if not p.is_zero():
            return False, (n, p)
    return True, None


def parity_of(a: State):
    """0/1 for parity-homogeneous states, None otherwise."""
    if a.is_zero():
        return 0
    ps = {mono_parity(a.sys, m) for m in a.terms}
    return ps.pop() if len(ps) == 1 else None


def symbol(a: State, r: int):
    """Image in the associated graded at degree r as a DiffPoly in symbol
    variables; monomials shorter than r map to 0."""
    from . import diffalg

    out = diffalg.diff_zero()
    for mono, c in a.terms.items():
        if len(mono) > r:
            raise ValueError(f"degree {len(mono)} exceeds symbol degree {r}")
        if len(mono) < r:
            continue
        coeff = c
        factors = []
        for gi, m in mono:
            g = a.sys.generators[gi]
            k = -m - 1
            coeff /= factorial(k)
            factors.append(diffalg.symbol_var(g.family, g.copy, g.coord, k))
        out = diffalg.diff_add(
            out, diffalg.monomial_from_factors(factors, coeff)
        )
    return out


# -- serialization ----------------------------------------------------------


def state_to_text(a: State) -> str:
    """Canonical text: terms sorted by monomial, 'p/q * g[slot,fam,i](-m) ...'."""
    if a.is_zero():
        return "0"
    parts = []
    for mono in sorted(a.terms):
        c = a.terms[mono]
        if mono:
            facs = " ".join(
                f"{a.sys.generators[gi].token()}({m})" for gi, m in mono
            )
        else:
            facs = "1"
        parts.append(f"{qstr(c)} * {facs}")
    return " + ".join(parts)


def state_from_text(sys: SystemSpec, text: str) -> State:
    text = text.strip()
    if text == "0":
        return State(sys)
    out = State(sys)
    for part in text.split(" + "):
        coeff_txt, facs_txt = part.split(" * ", 1)
        c = parse_qstr(coeff_txt)
        modes = []
        if facs_txt.strip() != "1":
            for tok in facs_txt.split():
                # g[b1,beta,2](-3)
                inner, mode_txt = tok.split("](", 1)
                slot, fam, coord = inner[2:].split(",")
                copy = int(slot[1:])
                m = int(mode_txt[:-1])
                modes.append((sys.gen(fam, copy, int(coord)).index, m))
        out = out.add(monomial_state(sys, modes, c))
    return out
