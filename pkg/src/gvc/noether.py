"""Noether identities, higher-stage identities, and the Koszul-Tate operator.

A Noether identity is stored as a record of coefficient rows: a map from
(field name, component, multi-index) to a polynomial coefficient.  The
record's antifield polynomial is

    Delta_r = sum rows[(A, comp, Lambda)] * s_bar^A_{comp, Lambda}

with coefficients multiplying from the left, and the identity itself is the
exact vanishing of sum rows * d_Lambda(E_A).  Stage-k records play the same
game one level up, with rows keyed by stage-(k-1) ghost antifields and an
optional quadratic certificate h for identities that only hold on shell.
"""
from __future__ import annotations

from fractions import Fraction

from .algebra import KIND_ANTIFIELD, KIND_FIELD, GvcError
from .jets import EvolutionaryDerivation, iterated_derivative, prolong_apply
from .variational import Density, check_variational_symmetry, euler_lagrange


def comp_label(name, comp):
    return "%s[%s]" % (name, ",".join(str(i) for i in comp))


class NoetherRecord:
    """One complete Noether identity, labelled by a ghost component."""

    __slots__ = ("ghost", "component", "rows")

    def __init__(self, ghost, component, rows):
        self.ghost = ghost
        self.component = tuple(component)
        self.rows = dict(rows)

    def label(self):
        return comp_label(self.ghost, self.component)

    def delta_poly(self, reg):
        """The antifield polynomial Delta_r carried by this record."""
        out = reg.zero
        for (name, comp, index), coeff in sorted(self.rows.items()):
            out = out + coeff * reg.var(name + "_bar", comp, index)
        return out

    def residual(self, el):
        """sum rows * d_Lambda(E_A); zero exactly when the identity holds."""
        out = None
        for (name, comp, index), coeff in sorted(self.rows.items()):
            term = coeff * iterated_derivative(el.get(name, comp), index)
            out = term if out is None else out + term
        return out


class StageRecord:
    """A stage-k >= 1 identity-among-identities, rows over stage-(k-1) ghosts.

    ``h`` is the optional on-shell certificate: the recorded identity is
    LHS + delta_KT(h) = 0 where LHS contracts the rows with total
    derivatives of the previous-stage Delta polynomials.
    """

    __slots__ = ("stage", "ghost", "component", "rows", "h")

    def __init__(self, stage, ghost, component, rows, h=None):
        if stage < 1:
            raise GvcError("stage records start at stage 1")
        self.stage = stage
        self.ghost = ghost
        self.component = tuple(component)
        self.rows = dict(rows)
        self.h = h

    def label(self):
        return comp_label(self.ghost, self.component)

    def delta_poly(self, reg):
        """Linear part plus certificate: the full Delta_{r_k} polynomial."""
        out = reg.zero
        for (name, comp, index), coeff in sorted(self.rows.items()):
            out = out + coeff * reg.var(name + "_bar", comp, index)
        if self.h is not None:
            out = out + self.h
        return out

    def lhs(self, reg, previous):
        """Rows contracted with total derivatives of previous Delta polynomials."""
        out = reg.zero
        for (name, comp, index), coeff in sorted(self.rows.items()):
            prev = previous.get((name, comp))
            if prev is None:
                raise GvcError("stage %d row targets %s which has no stage-%d record"
                               % (self.stage, comp_label(name, comp), self.stage - 1))
            out = out + coeff * iterated_derivative(prev, index)
        return out


def _el(theory):
    cached = getattr(theory, "_el_cache", None)
    if cached is None:
        cached = euler_lagrange(theory.lagrangian)
        theory._el_cache = cached
    return cached


def _entry(check, target, status, residual=None, note=""):
    out = {"check": check, "target": target, "status": status}
    if residual is not None and not residual.is_zero():
        out["residual"] = residual.pretty()
    if note:
        out["note"] = note
    return out


def verify_ni(theory):
    """One report entry per Noether record; pass iff the residual vanishes."""
    el = _el(theory)
    entries = []
    for rec in theory.records:
        res = rec.residual(el)
        status = "pass" if res.is_zero() else "fail"
        entries.append(_entry("ni", rec.label(), status, res))
    if not theory.records:
        entries.append(_entry("ni", "-", "pass", note="no records declared"))
    return entries


def _previous_deltas(theory, k):
    reg = theory.registry
    if k == 1:
        return {(r.ghost, r.component): r.delta_poly(reg) for r in theory.records}
    return {(r.ghost, r.component): r.delta_poly(reg)
            for r in theory.stage_records(k - 1)}


def verify_stage_ni(theory, k):
    """Report entries for every stage-k record.

    A record passes when LHS + delta_KT(h) = 0; with no certificate it must
    close off shell (LHS = 0), otherwise the entry is only 'unverified-on-shell'.
    """
    recs = theory.stage_records(k)
    if not recs:
        return [_entry("stages", "stage %d" % k, "pass",
                       note="no stage-%d records declared" % k)]
    previous = _previous_deltas(theory, k)
    kt = assemble_kt(theory)
    entries = []
    for rec in recs:
        lhs = rec.lhs(theory.registry, previous)
        if rec.h is not None:
            res = lhs + prolong_apply(kt, rec.h)
            status = "pass" if res.is_zero() else "fail"
            entries.append(_entry("stages", rec.label(), status, res,
                                  note="with h certificate"))
        elif lhs.is_zero():
            entries.append(_entry("stages", rec.label(), "pass", lhs))
        else:
            entries.append(_entry(
                "stages", rec.label(), "unverified-on-shell", lhs,
                note="on-shell identity unverified without certificate"))
    return entries


def assemble_kt(theory):
    """The Koszul-Tate operator: the right derivation sending each antifield
    to the object it pairs with and everything else to zero."""
    reg = theory.registry
    comps = {}
    el = _el(theory)
    for name, sym in reg.symbols.items():
        if sym.kind == KIND_FIELD:
            for comp in sym.components():
                comps[(name + "_bar", comp)] = el.get(name, comp)
    for rec in theory.records:
        comps[(rec.ghost + "_bar", rec.component)] = rec.delta_poly(reg)
    for k in theory.stage_numbers():
        for rec in theory.stage_records(k):
            comps[(rec.ghost + "_bar", rec.component)] = rec.delta_poly(reg)
    return EvolutionaryDerivation(reg, comps, right=True, name="delta_KT")


def check_kt_nilpotent(theory):
    """Apply the KT operator to each of its own components; report residuals."""
    kt = assemble_kt(theory)
    entries = []
    ok = True
    for (name, comp), ups in sorted(kt.components.items()):
        res = prolong_apply(kt, ups)
        if not res.is_zero():
            ok = False
            entries.append(_entry("kt", comp_label(name, comp), "fail", res))
    if ok:
        entries.append(_entry("kt", "delta_KT", "pass"))
    return entries


def extended_lagrangian(theory):
    """L_e = L + sum over all records of ghost * Delta (ghosts multiply from
    the left); the KT operator is a variational symmetry of L_e."""
    reg = theory.registry
    L = theory.lagrangian
    L = getattr(L, "coeff", L)
    for rec in theory.records:
        L = L + reg.var(rec.ghost, rec.component) * rec.delta_poly(reg)
    for k in theory.stage_numbers():
        for rec in theory.stage_records(k):
            L = L + reg.var(rec.ghost, rec.component) * rec.delta_poly(reg)
    return Density(L)


def check_extended(theory):
    """Report entry: is delta_KT a variational symmetry of L_e?"""
    kt = assemble_kt(theory)
    Le = extended_lagrangian(theory)
    ok = check_variational_symmetry(kt, Le).trivial
    return [_entry("extended", "L_e", "pass" if ok else "fail")]


def check_ni_trivial(theory, record, H):
    """True iff the record's Delta polynomial equals delta_KT(H) exactly."""
    kt = assemble_kt(theory)
    return record.delta_poly(theory.registry) == prolong_apply(kt, H)


def _solve_exact(columns, target):
    """Solve an exact rational linear system sum x_k columns[k] = target.

    Each column and the target are GradedPolys; rows of the matrix are
    indexed by the monomials that occur anywhere.  Returns a coefficient
    list or None when the system is inconsistent.
    """
    rows = {}
    ncol = len(columns)
    for k, poly in enumerate(columns):
        for key, c in poly.terms.items():
            rows.setdefault(key, [Fraction(0)] * (ncol + 1))[k] += c
    for key, c in target.terms.items():
        rows.setdefault(key, [Fraction(0)] * (ncol + 1))[ncol] += c
    M = [list(map(Fraction, r)) for r in rows.values()]
    pivots = []
    r0 = 0
    for col in range(ncol):
        sel = next((r for r in range(r0, len(M)) if M[r][col]), None)
        if sel is None:
            continue
        M[r0], M[sel] = M[sel], M[r0]
        inv = 1 / M[r0][col]
        M[r0] = [x * inv for x in M[r0]]
        for r in range(len(M)):
            if r != r0 and M[r][col]:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[r0])]
        pivots.append((r0, col))
        r0 += 1
    if any(M[r][ncol] for r in range(r0, len(M))):
        return None
    x = [Fraction(0)] * ncol
    for r, col in pivots:
        x[col] = M[r][ncol]
    return x


def solve_trivial_witness(theory, record):
    """Brute-force search for H with Delta_r = delta_KT(H), H quadratic in
    zero-order field antifields with constant rational coefficients.

    Returns the certificate polynomial, or None when no such H exists (which
    does not preclude triviality by a more general witness).
    """
    reg = theory.registry
    target = record.delta_poly(reg)
    # Every image delta_KT(xbar*ybar) carries exactly one surviving antifield
    # factor, and it is an undifferentiated field antifield.  A target
    # monomial of any other shape is outside the span, so reject it before
    # building the (expensive) image system.
    for evens, odds in target.terms:
        anti = [(v, e) for v, e in evens if v.symbol.kind == KIND_ANTIFIELD]
        anti += [(v, 1) for v in odds if v.symbol.kind == KIND_ANTIFIELD]
        if sum(e for _, e in anti) != 1:
            return None
        v = anti[0][0]
        if v.index or v.symbol.antifield_number != 1:
            return None
    kt = assemble_kt(theory)
    bases = []
    for name, sym in sorted(reg.symbols.items()):
        if sym.kind == KIND_ANTIFIELD and sym.antifield_number == 1:
            for comp in sym.components():
                bases.append((name, comp))
    monomials = []
    images = []
    for i in range(len(bases)):
        for j in range(i, len(bases)):
            m = reg.var(*bases[i]) * reg.var(*bases[j])
            if m.is_zero():
                continue
            monomials.append(m)
            images.append(prolong_apply(kt, m))
    coeffs = _solve_exact(images, target)
    if coeffs is None:
        return None
    H = reg.zero
    for c, m in zip(coeffs, monomials):
        if c:
            H = H + m.scale(c)
    assert check_ni_trivial(theory, record, H)
    return H


def triviality_report(theory):
    """Classify each Noether record by the quadratic-witness search.

    A record that admits a boundary certificate is reported as trivial
    (``pass`` with the certificate size); when the search finds nothing the
    entry is ``skipped`` -- the ansatz is not exhaustive, so absence of a
    witness is not a disproof.
    """
    entries = []
    for rec in theory.records:
        H = solve_trivial_witness(theory, rec)
        if H is not None:
            entries.append(_entry(
                "triviality", rec.label(), "pass",
                note="trivial: boundary certificate with %d terms"
                % H.num_terms()))
        else:
            entries.append(_entry(
                "triviality", rec.label(), "skipped",
                note="not certified trivial by the quadratic ansatz"))
    if not theory.records:
        entries.append(_entry("triviality", "-", "pass",
                              note="no records declared"))
    return entries
