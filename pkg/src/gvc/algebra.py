"""Exact graded-commutative polynomial algebra on jet coordinates.

Everything downstream (total derivatives, Euler-Lagrange operators, Noether
identities, BRST algebra) reduces to arithmetic in one ring: polynomials with
rational coefficients in jet variables ``s^A_Lambda``, where the base symbols
``s^A`` carry a Grassmann parity and the multi-index ``Lambda`` is a sorted
multiset of base-coordinate directions.  Even variables commute, odd variables
anticommute and square to zero; the sign of every reordering is determined by
one global variable order (kind rank, symbol name, component tuple,
multi-index), which this module owns.

Coefficients are exact: Python ints where possible, ``fractions.Fraction``
otherwise.  No floats anywhere.
"""

from __future__ import annotations

from fractions import Fraction

__all__ = [
    "GvcError",
    "GradingError",
    "JetOrderCapError",
    "SymbolDecl",
    "JetVariable",
    "ConstantTable",
    "Registry",
    "GradedPoly",
    "KIND_FIELD",
    "KIND_GHOST",
    "KIND_ANTIFIELD",
]


class GvcError(Exception):
    """Base class for everything this package raises on purpose."""


class GradingError(GvcError):
    """A parity / ghost-number / antifield-number bookkeeping rule was violated."""


class JetOrderCapError(GvcError):
    """A requested jet variable exceeds the configured jet-order cap."""

    def __init__(self, symbol, index, cap):
        super().__init__(
            "jet order %d of %s%r exceeds the cap %d; raise the cap via "
            "Registry(jet_order=...) or the --jet-order flag / GVC_JET_ORDER"
            % (len(index), symbol, tuple(index), cap)
        )
        self.symbol = symbol
        self.index = tuple(index)
        self.cap = cap


# Kind ranks fix the coarse level of the global variable order.
KIND_FIELD = 0
KIND_GHOST = 1
KIND_ANTIFIELD = 2

_KIND_NAMES = {KIND_FIELD: "field", KIND_GHOST: "ghost", KIND_ANTIFIELD: "antifield"}


def _rat(x):
    """Coerce to an exact rational (int stays int)."""
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else x
    raise TypeError("expected an exact rational, got %r" % (x,))


class SymbolDecl:
    """One declared symbol family (a field, a ghost, or an antifield).

    A family such as ``a[r:3, mu:4]`` expands to one scalar jet coordinate per
    concrete component; the declaration records parity per component, the
    ghost/antifield numbers shared by the family, and an optional symmetry of
    the component tuple (``sym`` sorts components, ``antisym`` sorts with a
    sign and kills repeated indices).
    """

    __slots__ = (
        "name",
        "kind",
        "stage",
        "slots",
        "parities",
        "ghost_number",
        "antifield_number",
        "symmetry",
        "base",
        "_components",
    )

    def __init__(self, name, kind, slots=(), parities=0, ghost_number=0,
                 antifield_number=0, symmetry=None, stage=None, base=None):
        self.name = name
        self.kind = kind
        self.stage = stage
        self.slots = tuple(int(s) for s in slots)
        self.ghost_number = int(ghost_number)
        self.antifield_number = int(antifield_number)
        if symmetry not in (None, "sym", "antisym"):
            raise ValueError("symmetry must be None, 'sym' or 'antisym'")
        if symmetry and len(set(self.slots)) > 1:
            raise ValueError("symmetric component slots must share one range")
        self.symmetry = symmetry
        self.base = base
        # parities: either a single 0/1 for the whole family, or a map keyed
        # by the value of one slot position: (slot_pos, (p_0, p_1, ...)).
        if isinstance(parities, tuple):
            pos, vec = parities
            self.parities = (int(pos), tuple(int(v) & 1 for v in vec))
        else:
            self.parities = int(parities) & 1
        self._components = None

    def parity(self, component):
        if isinstance(self.parities, int):
            return self.parities
        pos, vec = self.parities
        return vec[component[pos]]

    def canonicalize(self, component):
        """Return (canonical component tuple, sign) honoring the symmetry flag.

        Sign is 0 when an antisymmetric family is hit with a repeated index.
        """
        component = tuple(component)
        if len(component) != len(self.slots):
            raise ValueError(
                "%s expects %d component indices, got %r"
                % (self.name, len(self.slots), component)
            )
        for i, c in enumerate(component):
            if not 0 <= c < self.slots[i]:
                raise ValueError(
                    "component index %d out of range %d for %s"
                    % (c, self.slots[i], self.name)
                )
        if self.symmetry is None or len(component) < 2:
            return component, 1
        if self.symmetry == "sym":
            return tuple(sorted(component)), 1
        if len(set(component)) != len(component):
            return tuple(sorted(component)), 0
        perm = sorted(range(len(component)), key=lambda i: component[i])
        sign = 1
        seen = [False] * len(perm)
        for i in range(len(perm)):
            if seen[i]:
                continue
            j = i
            length = 0
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                length += 1
            if length % 2 == 0:
                sign = -sign
        return tuple(sorted(component)), sign

    def components(self):
        """All canonical component tuples, in lexicographic order."""
        if self._components is None:
            out = []
            def rec(prefix):
                if len(prefix) == len(self.slots):
                    out.append(tuple(prefix))
                    return
                lo = 0
                if self.symmetry == "sym" and prefix:
                    lo = prefix[-1]
                elif self.symmetry == "antisym" and prefix:
                    lo = prefix[-1] + 1
                for c in range(lo, self.slots[len(prefix)]):
                    prefix.append(c)
                    rec(prefix)
                    prefix.pop()
            rec([])
            self._components = tuple(out)
        return self._components

    def __repr__(self):
        return "SymbolDecl(%s:%s)" % (self.name, _KIND_NAMES[self.kind])


class JetVariable:
    """An interned scalar jet coordinate: (symbol family, component, multi-index).

    Instances are unique per registry, so identity comparison is safe.  ``key``
    is the global-order sort key used for canonical monomial form and for the
    Koszul sign of every odd reordering.
    """

    __slots__ = ("symbol", "component", "index", "parity", "key", "order")

    def __init__(self, symbol, component, index):
        self.symbol = symbol
        self.component = component
        self.index = index
        self.parity = symbol.parity(component)
        self.order = len(index)
        self.key = (symbol.kind, symbol.name, component, index)

    def __repr__(self):
        return self.name()

    def name(self):
        bits = ",".join(str(c) for c in self.component)
        jets = ",".join(str(j) for j in self.index)
        if not bits and not jets:
            return self.symbol.name
        return "%s[%s;%s]" % (self.symbol.name, bits, jets)

    def __lt__(self, other):
        return self.key < other.key


class ConstantTable:
    """A named tensor of exact rationals, stored sparsely.

    Used for structure constants, metrics, Casimir forms and Levi-Civita
    symbols; entries absent from the map are zero.
    """

    __slots__ = ("name", "shape", "entries")

    def __init__(self, name, shape, entries=None):
        self.name = name
        self.shape = tuple(int(s) for s in shape)
        self.entries = {}
        for idx, val in (entries or {}).items():
            self[idx]  # bounds check
            val = _rat(val)
            if val:
                self.entries[tuple(idx)] = val

    def __getitem__(self, idx):
        idx = tuple(idx)
        if len(idx) != len(self.shape):
            raise ValueError("table %s expects %d indices" % (self.name, len(self.shape)))
        for i, v in zip(idx, self.shape):
            if not 0 <= i < v:
                raise ValueError("index %r out of bounds for table %s" % (idx, self.name))
        return self.entries.get(idx, 0)

    def __setitem__(self, idx, val):
        val = _rat(val)
        idx = tuple(idx)
        self[idx]  # bounds check
        if val:
            self.entries[idx] = val
        else:
            self.entries.pop(idx, None)

    def __iter__(self):
        return iter(sorted(self.entries.items()))


def _merge_even(e1, e2):
    """Merge two sorted even exponent tuples, adding exponents."""
    if not e1:
        return e2
    if not e2:
        return e1
    out = []
    i = j = 0
    n1, n2 = len(e1), len(e2)
    while i < n1 and j < n2:
        v1, x1 = e1[i]
        v2, x2 = e2[j]
        if v1 is v2:
            out.append((v1, x1 + x2))
            i += 1
            j += 1
        elif v1.key < v2.key:
            out.append(e1[i])
            i += 1
        else:
            out.append(e2[j])
            j += 1
    out.extend(e1[i:])
    out.extend(e2[j:])
    return tuple(out)


def _merge_odd(o1, o2):
    """Merge two sorted odd factor tuples.

    Returns (merged tuple, sign) with the Koszul sign of the sort, or
    (None, 0) when a factor repeats (odd squares vanish).
    """
    if not o1:
        return o2, 1
    if not o2:
        return o1, 1
    out = []
    sign = 1
    i = j = 0
    n1, n2 = len(o1), len(o2)
    while i < n1 and j < n2:
        v1 = o1[i]
        v2 = o2[j]
        if v1 is v2:
            return None, 0
        if v1.key < v2.key:
            out.append(v1)
            i += 1
        else:
            # v2 jumps over the n1-i remaining factors of o1
            if (n1 - i) & 1:
                sign = -sign
            out.append(v2)
            j += 1
    out.extend(o1[i:])
    out.extend(o2[j:])
    return tuple(out), sign


def _mul_terms(t1, t2):
    """Multiply two term dicts {(evens, odds): coeff}."""
    if len(t1) > len(t2):
        t1, t2 = t2, t1
        swapped = True
    else:
        swapped = False
    out = {}
    for (e1, o1), c1 in t1.items():
        for (e2, o2), c2 in t2.items():
            if swapped:
                odds, sign = _merge_odd(o2, o1)
            else:
                odds, sign = _merge_odd(o1, o2)
            if sign == 0:
                continue
            key = (_merge_even(e1, e2), odds)
            c = out.get(key, 0) + sign * c1 * c2
            if c:
                out[key] = c
            else:
                del out[key]
    return out


class GradedPoly:
    """A graded-commutative polynomial in canonical form.

    ``terms`` maps a monomial key to a nonzero rational coefficient.  A key is
    ``(evens, odds)``: evens is a tuple of (JetVariable, exponent) pairs and
    odds a tuple of JetVariables, both strictly increasing in the global
    variable order.  Canonical form makes equality checking a dict compare.
    """

    __slots__ = ("reg", "terms")

    def __init__(self, reg, terms):
        self.reg = reg
        self.terms = terms

    # -- constructors ------------------------------------------------------

    @staticmethod
    def constant(reg, c):
        c = _rat(c)
        return GradedPoly(reg, {((), ()): c} if c else {})

    @staticmethod
    def from_var(reg, var):
        if var.parity:
            return GradedPoly(reg, {((), (var,)): 1})
        return GradedPoly(reg, {(((var, 1),), ()): 1})

    # -- ring structure ----------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if len(self.terms) < len(other.terms):
            self, other = other, self
        out = dict(self.terms)
        for key, c in other.terms.items():
            s = out.get(key, 0) + c
            if s:
                out[key] = s
            else:
                del out[key]
        return GradedPoly(self.reg, out)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for key, c in other.terms.items():
            s = out.get(key, 0) - c
            if s:
                out[key] = s
            else:
                del out[key]
        return GradedPoly(self.reg, out)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return GradedPoly(self.reg, {k: -c for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return GradedPoly(self.reg, _mul_terms(self.terms, other.terms))

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        out = GradedPoly.constant(self.reg, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def scale(self, c):
        c = _rat(c)
        if not c:
            return GradedPoly(self.reg, {})
        return GradedPoly(self.reg, {k: v * c for k, v in self.terms.items()})

    def _coerce(self, other):
        if isinstance(other, GradedPoly):
            return other
        if isinstance(other, (int, Fraction)):
            return GradedPoly.constant(self.reg, other)
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = GradedPoly.constant(self.reg, other)
        if not isinstance(other, GradedPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    # -- gradings ----------------------------------------------------------

    def parity(self):
        """0 or 1 for a parity-homogeneous polynomial, None when mixed or zero."""
        seen = None
        for (_, odds) in self.terms:
            p = len(odds) & 1
            if seen is None:
                seen = p
            elif seen != p:
                return None
        return seen

    def _weight(self, attr):
        seen = None
        for (evens, odds) in self.terms:
            w = sum(getattr(v.symbol, attr) * e for v, e in evens)
            w += sum(getattr(v.symbol, attr) for v in odds)
            if seen is None:
                seen = w
            elif seen != w:
                return None
        return seen

    def ghost_number(self):
        """Total ghost number when homogeneous, else None (0 for the zero poly)."""
        return 0 if not self.terms else self._weight("ghost_number")

    def antifield_number(self):
        return 0 if not self.terms else self._weight("antifield_number")

    def ghost_degree_parts(self):
        """Split into {ghost polynomial degree: part}; degree counts ghost factors."""
        parts = {}
        for key, c in self.terms.items():
            evens, odds = key
            d = sum(e for v, e in evens if v.symbol.kind == KIND_GHOST)
            d += sum(1 for v in odds if v.symbol.kind == KIND_GHOST)
            parts.setdefault(d, {})[key] = c
        return {d: GradedPoly(self.reg, t) for d, t in sorted(parts.items())}

    # -- structure queries ---------------------------------------------------

    def variables(self):
        """The set of jet variables occurring in this polynomial."""
        vs = set()
        for (evens, odds) in self.terms:
            for v, _ in evens:
                vs.add(v)
            vs.update(odds)
        return vs

    def max_jet_order(self):
        return max((v.order for v in self.variables()), default=0)

    def degree(self):
        """Maximum total polynomial degree across terms (0 for the zero poly)."""
        best = 0
        for (evens, odds) in self.terms:
            best = max(best, sum(e for _, e in evens) + len(odds))
        return best

    def degree_parts(self):
        parts = {}
        for key, c in self.terms.items():
            evens, odds = key
            d = sum(e for _, e in evens) + len(odds)
            parts.setdefault(d, {})[key] = c
        return {d: GradedPoly(self.reg, t) for d, t in sorted(parts.items())}

    def constant_term(self):
        return self.terms.get(((), ()), 0)

    def coefficient(self, key):
        return self.terms.get(key, 0)

    def num_terms(self):
        return len(self.terms)

    # -- derivatives ---------------------------------------------------------

    def derivative(self, var, side="left"):
        """Graded partial derivative with respect to a single jet variable.

        ``side='left'`` differentiates acting from the left, ``side='right'``
        from the right; for odd variables the two differ by the sign
        (-1)^([v]([p]+[v])) on parity-homogeneous input.
        """
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        out = {}
        if var.parity == 0:
            for (evens, odds), c in self.terms.items():
                for i, (v, e) in enumerate(evens):
                    if v is var:
                        if e == 1:
                            new = evens[:i] + evens[i + 1:]
                        else:
                            new = evens[:i] + ((v, e - 1),) + evens[i + 1:]
                        key = (new, odds)
                        s = out.get(key, 0) + c * e
                        if s:
                            out[key] = s
                        else:
                            del out[key]
                        break
            return GradedPoly(self.reg, out)
        for (evens, odds), c in self.terms.items():
            for i, v in enumerate(odds):
                if v is var:
                    if side == "left":
                        sign = -1 if i & 1 else 1
                    else:
                        sign = -1 if (len(odds) - 1 - i) & 1 else 1
                    key = (evens, odds[:i] + odds[i + 1:])
                    s = out.get(key, 0) + c * sign
                    if s:
                        out[key] = s
                    else:
                        del out[key]
                    break
        return GradedPoly(self.reg, out)

    # -- printing ------------------------------------------------------------

    def _sorted_keys(self):
        return sorted(
            self.terms,
            key=lambda k: (tuple((v.key, e) for v, e in k[0]),
                           tuple(v.key for v in k[1])),
        )

    def pretty(self):
        """Canonical text form; parses back to an equal polynomial."""
        if not self.terms:
            return "0"
        chunks = []
        for key in self._sorted_keys():
            c = self.terms[key]
            evens, odds = key
            factors = []
            for v, e in evens:
                factors.append(v.name() + ("^%d" % e if e > 1 else ""))
            for v in odds:
                factors.append(v.name())
            neg = c < 0
            c = -c if neg else c
            body = "*".join(factors)
            if not factors:
                coeff = str(c)
            elif c == 1:
                coeff = body
            else:
                coeff = "%s*%s" % (c, body)
            if not chunks:
                chunks.append("-" + coeff if neg else coeff)
            else:
                chunks.append((" - " if neg else " + ") + coeff)
        return "".join(chunks)

    def __repr__(self):
        s = self.pretty()
        return s if len(s) <= 120 else s[:117] + "..."


class Registry:
    """Owns symbol declarations, constant tables, and the jet-variable interner.

    The registry is the single source of truth for the global variable order
    and the jet-order cap.  It starts open; a theory loader freezes it after
    the last declaration, after which registering symbols raises.
    """

    DEFAULT_JET_ORDER = 4

    def __init__(self, dim, jet_order=None):
        dim = int(dim)
        if not 1 <= dim <= 8:
            raise ValueError("spacetime dimension must be between 1 and 8")
        self.dim = dim
        self.jet_order = Registry.DEFAULT_JET_ORDER if jet_order is None else int(jet_order)
        if self.jet_order < 1:
            raise ValueError("jet-order cap must be at least 1")
        self.symbols = {}
        self.tables = {}
        self.frozen = False
        self._vars = {}
        self.zero = GradedPoly(self, {})
        self.one = GradedPoly.constant(self, 1)

    # -- declaration ---------------------------------------------------------

    def _check_open(self, what):
        if self.frozen:
            raise GvcError("registry is frozen; cannot declare %s" % what)

    def _check_name(self, name):
        if name in self.symbols or name in self.tables:
            raise GvcError("name %r is already declared" % name)

    def declare_field(self, name, slots=(), parities=0, symmetry=None):
        """Declare a field family and, implicitly, its antifield family ``<name>_bar``.

        The antifield copies the component slots and symmetry, flips the
        parity of every component, and carries antifield number 1 and ghost
        number -1.
        """
        self._check_open("field %s" % name)
        self._check_name(name)
        sym = SymbolDecl(name, KIND_FIELD, slots, parities, 0, 0, symmetry)
        self.symbols[name] = sym
        bar = self._declare_antifield(name + "_bar", sym, stage=-1)
        return sym, bar

    def declare_ghost(self, name, stage, slots=(), parities=0, symmetry=None, base=None):
        """Declare a stage-k ghost family: ghost number k+1, antifield number -(k+1)."""
        self._check_open("ghost %s" % name)
        self._check_name(name)
        sym = SymbolDecl(name, KIND_GHOST, slots, parities,
                         ghost_number=stage + 1, antifield_number=-(stage + 1),
                         symmetry=symmetry, stage=stage, base=base)
        self.symbols[name] = sym
        return sym

    def _declare_antifield(self, name, base, stage):
        self._check_name(name)
        if isinstance(base.parities, int):
            parities = (base.parities + 1) & 1
        else:
            pos, vec = base.parities
            parities = (pos, tuple((v + 1) & 1 for v in vec))
        # Field antifields (stage -1) carry antifield number 1; the antifield
        # paired with a stage-k ghost carries k+2.
        ant = 1 if stage == -1 else stage + 2
        sym = SymbolDecl(name, KIND_ANTIFIELD, base.slots, parities,
                         ghost_number=-ant, antifield_number=ant,
                         symmetry=base.symmetry, stage=stage, base=base)
        self.symbols[name] = sym
        return sym

    def declare_ghost_antifield(self, ghost):
        """Declare the antifield paired with a ghost family (name ``<ghost>_bar``)."""
        self._check_open("antifield for %s" % ghost.name)
        return self._declare_antifield(ghost.name + "_bar", ghost, stage=ghost.stage)

    def declare_table(self, name, shape, entries=None):
        self._check_open("table %s" % name)
        self._check_name(name)
        tab = ConstantTable(name, shape, entries)
        self.tables[name] = tab
        return tab

    def freeze(self):
        self.frozen = True
        return self

    # -- jet variables ---------------------------------------------------------

    def jet_var(self, symbol, component=(), index=()):
        """The interned jet variable for (symbol, component, multi-index).

        The multi-index is sorted here, so permutations of the same directions
        name the same variable.  Returns (variable, sign) where sign comes
        from component canonicalization of sym/antisym families (0 kills the
        variable entirely).
        """
        if isinstance(symbol, str):
            try:
                symbol = self.symbols[symbol]
            except KeyError:
                raise GvcError("unknown symbol %r" % symbol) from None
        component, sign = symbol.canonicalize(component)
        if sign == 0:
            return None, 0
        index = tuple(sorted(index))
        for lam in index:
            if not 0 <= lam < self.dim:
                raise ValueError("jet direction %d out of range for dim %d" % (lam, self.dim))
        if len(index) > self.jet_order:
            raise JetOrderCapError(symbol.name, index, self.jet_order)
        k = (symbol.name, component, index)
        v = self._vars.get(k)
        if v is None:
            v = JetVariable(symbol, component, index)
            self._vars[k] = v
        return v, sign

    def var(self, name, component=(), index=()):
        """A single jet variable as a polynomial (signed for antisym components)."""
        v, sign = self.jet_var(name, component, index)
        if sign == 0:
            return self.zero
        p = GradedPoly.from_var(self, v)
        return p if sign == 1 else p.scale(sign)

    def const(self, c):
        return GradedPoly.constant(self, c)

    def poly_map_symbols(self, kinds=None):
        """All declared symbols, optionally filtered to a set of kinds."""
        out = []
        for sym in self.symbols.values():
            if kinds is None or sym.kind in kinds:
                out.append(sym)
        return out
