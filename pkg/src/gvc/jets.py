"""Total derivatives and evolutionary derivations on graded jet polynomials.

The total derivative here is the restriction of d_lambda to polynomials with
no explicit base-coordinate dependence: d_lambda = sum_{A,Lambda}
s^A_{lambda Lambda} * d/ds^A_Lambda.  All built-in theories are autonomous
with constant coefficient tables, so the dropped del/del-x^lambda term acts
as zero; this reduction is documented in the README.

An evolutionary derivation is determined by its values on zero-jet variables;
its prolongation acts on arbitrary jets through d_Lambda of those values.
Only vertical derivations are supported (no base-vector part): a derivation
whose horizontal part matters can always be traded for its vertical part when
testing variational identities, and the fixtures never need more.
"""

from __future__ import annotations

from gvc.algebra import (
    GradedPoly,
    GradingError,
    GvcError,
    KIND_GHOST,
)

__all__ = [
    "total_derivative",
    "iterated_derivative",
    "EvolutionaryDerivation",
    "prolong_apply",
    "commutator",
    "nilpotency_residuals",
    "check_odd_nilpotent",
]


def total_derivative(p, lam):
    """d_lam applied to p; an even derivation raising jet orders by one.

    Raises JetOrderCapError when a produced jet would exceed the registry cap.
    """
    reg = p.reg
    out = {}
    for (evens, odds), c in p.terms.items():
        for i, (v, e) in enumerate(evens):
            dv, _ = reg.jet_var(v.symbol, v.component, v.index + (lam,))
            if e == 1:
                rest = evens[:i] + evens[i + 1:]
            else:
                rest = evens[:i] + ((v, e - 1),) + evens[i + 1:]
            # insert dv into the even part (dv has v's parity: even)
            new = _insert_even(rest, dv)
            key = (new, odds)
            s = out.get(key, 0) + c * e
            if s:
                out[key] = s
            else:
                del out[key]
        n = len(odds)
        for i, v in enumerate(odds):
            dv, _ = reg.jet_var(v.symbol, v.component, v.index + (lam,))
            rest = odds[:i] + odds[i + 1:]
            # dv replaces v in place; moving it to the end costs (n-1-i) swaps,
            # after which sorting it back in is a standard merge.
            new, sign = _insert_odd(rest, dv)
            if sign == 0:
                continue
            if (n - 1 - i) & 1:
                sign = -sign
            key = (evens, new)
            s = out.get(key, 0) + c * sign
            if s:
                out[key] = s
            else:
                del out[key]
    return GradedPoly(reg, out)


def _insert_even(evens, v):
    """Insert one even variable into a sorted exponent tuple."""
    for i, (w, e) in enumerate(evens):
        if w is v:
            return evens[:i] + ((v, e + 1),) + evens[i + 1:]
        if v.key < w.key:
            return evens[:i] + ((v, 1),) + evens[i:]
    return evens + ((v, 1),)


def _insert_odd(odds, v):
    """Insert one odd variable at the end of a sorted tuple, then sort.

    Returns (tuple, sign) with the Koszul sign of carrying v leftward from the
    end to its slot; (None, 0) when v already occurs.
    """
    n = len(odds)
    for i in range(n - 1, -1, -1):
        w = odds[i]
        if w is v:
            return None, 0
        if w.key < v.key:
            new = odds[: i + 1] + (v,) + odds[i + 1:]
            return new, -1 if (n - 1 - i) & 1 else 1
    return (v,) + odds, -1 if n & 1 else 1


def iterated_derivative(p, index):
    """d_Lambda = d_{lam1} ... d_{lamk}; the empty multi-index is the identity."""
    for lam in index:
        p = total_derivative(p, lam)
    return p


class EvolutionaryDerivation:
    """A vertical derivation determined by zero-jet components.

    ``components`` maps (symbol name, component tuple) to the polynomial value
    on that zero-jet variable.  ``right=False`` gives a left derivation (the
    gauge/BRST case); ``right=True`` a right derivation (the Koszul-Tate
    case).  Parity and ghost number are inferred from the components and must
    be consistent across all of them.
    """

    __slots__ = ("reg", "components", "right", "parity", "ghost_number", "name",
                 "_coef_cache")

    def __init__(self, reg, components, right=False, name=None):
        self.reg = reg
        self.right = bool(right)
        self.name = name
        comps = {}
        for (sym_name, comp), val in components.items():
            sym = reg.symbols.get(sym_name)
            if sym is None:
                raise GvcError("unknown symbol %r in derivation" % sym_name)
            comp, sign = sym.canonicalize(comp)
            if sign == 0:
                continue
            if sign != 1:
                val = val.scale(sign)
            if not val.is_zero():
                if (sym_name, comp) in comps:
                    comps[(sym_name, comp)] = comps[(sym_name, comp)] + val
                else:
                    comps[(sym_name, comp)] = val
        self.components = comps
        self.parity, self.ghost_number = self._infer_grading()
        self._coef_cache = {}

    def _infer_grading(self):
        parity = None
        gh = None
        for (sym_name, comp), val in self.components.items():
            sym = self.reg.symbols[sym_name]
            vp = val.parity()
            if vp is None:
                raise GradingError(
                    "component for %s%r has mixed parity" % (sym_name, comp))
            p = (vp - sym.parity(comp)) & 1
            vg = val.ghost_number()
            g = None if vg is None else vg - sym.ghost_number
            if parity is None:
                parity, gh = p, g
            else:
                if p != parity:
                    raise GradingError(
                        "derivation parity is inconsistent at %s%r" % (sym_name, comp))
                if gh is not None and g != gh:
                    gh = None
        return (0 if parity is None else parity), gh

    def component(self, sym_name, comp):
        """The zero-jet value on (symbol, component); zero when absent."""
        return self.components.get((sym_name, tuple(comp)), self.reg.zero)

    def coefficient(self, var):
        """d_Lambda(upsilon^A) for the jet variable var = s^A_Lambda, cached."""
        got = self._coef_cache.get(var)
        if got is not None:
            return got
        base = self.components.get((var.symbol.name, var.component))
        if base is None or base.is_zero():
            val = self.reg.zero
            self._coef_cache[var] = val
            return val
        if var.index:
            # reuse the one-shorter prefix so chains share work
            parent, _ = self.reg.jet_var(var.symbol, var.component, var.index[:-1])
            val = total_derivative(self.coefficient(parent), var.index[-1])
        else:
            val = base
        self._coef_cache[var] = val
        return val

    def is_zero(self):
        return not self.components

    def __add__(self, other):
        if self.right != other.right:
            raise GvcError("cannot add left and right derivations")
        comps = dict(self.components)
        for k, v in other.components.items():
            comps[k] = comps.get(k, self.reg.zero) + v
        return EvolutionaryDerivation(self.reg, comps, right=self.right)

    def __neg__(self):
        return EvolutionaryDerivation(
            self.reg, {k: -v for k, v in self.components.items()}, right=self.right)

    def restrict(self, kinds=None, names=None):
        """A copy keeping only components on the given symbol kinds or names."""
        comps = {}
        for (sym_name, comp), val in self.components.items():
            sym = self.reg.symbols[sym_name]
            if kinds is not None and sym.kind not in kinds:
                continue
            if names is not None and sym_name not in names:
                continue
            comps[(sym_name, comp)] = val
        return EvolutionaryDerivation(self.reg, comps, right=self.right)

    def __repr__(self):
        label = self.name or "derivation"
        return "<%s %s on %d components>" % (
            "right" if self.right else "left", label, len(self.components))


def prolong_apply(u, p):
    """Apply the jet prolongation of u to p.

    Left derivations: sum over jet variables v = s^A_Lambda of
    d_Lambda(upsilon^A) * left_derivative(p, v).  Right derivations put the
    coefficient on the right of the right derivative instead.
    """
    out = p.reg.zero
    for v in p.variables():
        if (v.symbol.name, v.component) not in u.components:
            continue
        coef = u.coefficient(v)
        if coef.is_zero():
            continue
        if u.right:
            out = out + p.derivative(v, "right") * coef
        else:
            out = out + coef * p.derivative(v, "left")
    return out


def commutator(u, v):
    """The graded commutator [u, v] as an evolutionary derivation.

    Components: [u,v]^A = u(v^A) - (-1)^{[u][v]} v(u^A), where application is
    by prolongation.  Both arguments must be on the same side.
    """
    if u.right != v.right:
        raise GvcError("cannot commute a left with a right derivation")
    sign = -1 if (u.parity & v.parity) else 1
    comps = {}
    keys = set(u.components) | set(v.components)
    for key in keys:
        a = prolong_apply(u, v.components.get(key, u.reg.zero))
        b = prolong_apply(v, u.components.get(key, u.reg.zero))
        w = a - b if sign == 1 else a + b
        if not w.is_zero():
            comps[key] = w
    return EvolutionaryDerivation(u.reg, comps, right=u.right)


def nilpotency_residuals(u):
    """{component key: u(upsilon^A)} for every component of u, zeros dropped.

    For odd u this is the full nilpotency certificate: the prolongation of u
    squares to zero exactly when every residual vanishes.
    """
    out = {}
    for key, val in sorted(u.components.items()):
        r = prolong_apply(u, val)
        if not r.is_zero():
            out[key] = r
    return out


def check_odd_nilpotent(u):
    """True iff the odd derivation u squares to zero (by the residual criterion)."""
    if u.parity != 1 and not u.is_zero():
        raise GradingError("nilpotency criterion applies to odd derivations")
    return not nilpotency_residuals(u)
