"""Theory-spec parsing: declarations, expressions, and record blocks.

The file format is line-oriented and semicolon-terminated.  Summary of the
grammar (the full EBNF lives in the README):

    theory NAME ;
    dim INT ;  jet_order INT ;
    table NAME[d1,...] { [i,...] = RAT ; ... }
    field NAME[d1,...] (sym|antisym)? (even|odd|parity TBL@SLOT) ;
    L = EXPR ;
    ni GHOST[i:RANGE,...] { ( FIELD[idx...] ; jets... ) = EXPR ; ... }
    stage K GHOST[...] { ( PREVGHOST[idx...] ; jets... ) = EXPR ; ...
                         h { EXPR } ; }
    gauge { ( TARGET[idx...] ) = EXPR ; ... }
    gamma { ( GHOST[idx...] ) = EXPR ; ... }
    alpha K { ( TARGET[idx...] ) = EXPR ; ... }

Expressions: rationals, references ``name[components;jetindices]`` (either
half may be empty; a bare name means no indices at all), ``+ - * ^``,
parentheses, and explicit contractions ``sum(i,j){ ... }`` whose ranges are
inferred from where the indices sit (or written ``sum(i:4)``).  Ghosts are
not declared directly: each ``ni``/``stage`` block introduces its ghost
family, with Grassmann parity read off the record itself.

Blocks that mention ghosts (gauge, gamma, alpha) must come after all record
blocks.  Everything is exact rational arithmetic; parsing is deterministic.
"""
from __future__ import annotations

import string
from fractions import Fraction

from .algebra import (KIND_ANTIFIELD, KIND_FIELD, KIND_GHOST, GvcError,
                      GradedPoly, Registry)
from .noether import NoetherRecord, StageRecord


class ParseError(GvcError):
    """Lexical/syntax/validation error with source position."""

    def __init__(self, message, line, col):
        super().__init__("%s (line %d, column %d)" % (message, line, col))
        self.line = line
        self.col = col


_PUNCT = set(";,(){}[]=+-*^/:@")
_NAME_START = set(string.ascii_letters + "_")
_NAME_CONT = _NAME_START | set(string.digits)


def _tokenize(text):
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in _PUNCT:
            toks.append((ch, ch, line, col))
            i += 1
            col += 1
            continue
        if ch in string.digits:
            j = i
            while j < n and text[j] in string.digits:
                j += 1
            toks.append(("INT", int(text[i:j]), line, col))
            col += j - i
            i = j
            continue
        if ch in _NAME_START:
            j = i
            while j < n and text[j] in _NAME_CONT:
                j += 1
            toks.append(("NAME", text[i:j], line, col))
            col += j - i
            i = j
            continue
        raise ParseError("unexpected character %r" % ch, line, col)
    toks.append(("EOF", None, line, col))
    return toks


# ---------------------------------------------------------------------------
# Expression AST: tuples tagged by kind.
#   ("num", Fraction)                ("ref", name, comps, jets)
#   ("neg", node)                    ("add", [(sign, node), ...])
#   ("mul", [node, ...])             ("pow", node, int)
#   ("sum", [(var, range-or-None)], node)
# comps/jets entries: ("int", v) or ("var", name)


class TheorySpec:
    """A parsed theory: registry, Lagrangian, records, optional candidates."""

    __slots__ = ("name", "registry", "lagrangian", "records", "stages",
                 "gauge_candidate", "gamma", "alphas", "_el_cache")

    def __init__(self, name, registry, lagrangian, records, stages,
                 gauge_candidate=None, gamma=None, alphas=None):
        self.name = name
        self.registry = registry
        self.lagrangian = lagrangian
        self.records = list(records)
        self.stages = {k: list(v) for k, v in (stages or {}).items()}
        self.gauge_candidate = gauge_candidate
        self.gamma = dict(gamma or {})
        self.alphas = {k: dict(v) for k, v in (alphas or {}).items()}
        self._el_cache = None

    def stage_numbers(self):
        return sorted(self.stages)

    def stage_records(self, k):
        return self.stages.get(k, [])

    def alpha(self, k):
        return self.alphas.get(k, {})


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.pos = 0

    # -- token plumbing ------------------------------------------------------

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise ParseError("expected %r, found %r" % (kind, tok[1] if tok[0] != "EOF" else "end of input"),
                             tok[2], tok[3])
        return tok

    def expect_name(self, word=None):
        tok = self.expect("NAME")
        if word is not None and tok[1] != word:
            raise ParseError("expected %r, found %r" % (word, tok[1]), tok[2], tok[3])
        return tok

    def at(self, kind, value=None):
        tok = self.peek()
        return tok[0] == kind and (value is None or tok[1] == value)

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, tok[2], tok[3])

    # -- expression grammar ----------------------------------------------------

    def parse_expression(self):
        items = []
        sign = 1
        if self.at("+") or self.at("-"):
            sign = -1 if self.next()[0] == "-" else 1
        items.append((sign, self.parse_term()))
        while self.at("+") or self.at("-"):
            sign = -1 if self.next()[0] == "-" else 1
            items.append((sign, self.parse_term()))
        if len(items) == 1 and items[0][0] == 1:
            return items[0][1]
        return ("add", items)

    def parse_term(self):
        factors = [self.parse_power()]
        while self.at("*"):
            self.next()
            factors.append(self.parse_power())
        if len(factors) == 1:
            return factors[0]
        return ("mul", factors)

    def parse_power(self):
        base = self.parse_atom()
        if self.at("^"):
            self.next()
            tok = self.expect("INT")
            return ("pow", base, tok[1])
        return base

    def parse_atom(self):
        tok = self.peek()
        if tok[0] == "-":
            self.next()
            return ("neg", self.parse_power())
        if tok[0] == "(":
            self.next()
            node = self.parse_expression()
            self.expect(")")
            return node
        if tok[0] == "INT":
            self.next()
            num = Fraction(tok[1])
            if self.at("/"):
                self.next()
                den = self.expect("INT")
                if den[1] == 0:
                    self.error("division by zero", den)
                num = num / den[1]
            return ("num", num)
        if tok[0] == "NAME" and tok[1] == "sum":
            self.next()
            self.expect("(")
            binders = []
            while True:
                name = self.expect("NAME")
                rng = None
                if self.at(":"):
                    self.next()
                    rng = self.expect("INT")[1]
                binders.append((name[1], rng))
                if self.at(","):
                    self.next()
                    continue
                break
            self.expect(")")
            self.expect("{")
            body = self.parse_expression()
            self.expect("}")
            return ("sum", binders, body)
        if tok[0] == "NAME":
            self.next()
            comps, jets = self.parse_index_group()
            return ("ref", tok[1], comps, jets)
        self.error("expected an expression")

    def parse_index_group(self):
        """Optional [comps;jets] group; a bare name has no indices at all."""
        if not self.at("["):
            return [], []
        self.next()
        comps = self.parse_index_list(stop=(";", "]"))
        jets = []
        if self.at(";"):
            self.next()
            jets = self.parse_index_list(stop=("]",))
        self.expect("]")
        return comps, jets

    def parse_index_list(self, stop):
        atoms = []
        while self.peek()[0] not in stop:
            tok = self.next()
            if tok[0] == "INT":
                atoms.append(("int", tok[1]))
            elif tok[0] == "NAME":
                atoms.append(("var", tok[1]))
            else:
                raise ParseError("expected an index", tok[2], tok[3])
            if self.at(","):
                self.next()
        return atoms


# ---------------------------------------------------------------------------
# Evaluation against a registry


class _Eval:
    def __init__(self, reg):
        self.reg = reg

    def atom_value(self, atom, env, tok=None):
        if atom[0] == "int":
            return atom[1]
        try:
            return env[atom[1]]
        except KeyError:
            raise GvcError("unbound index %r" % atom[1])

    def infer_range(self, var, node):
        """Scan for usages of ``var`` and return the index range it must have."""
        found = set()

        def scan(n):
            kind = n[0]
            if kind == "ref":
                name = n[1]
                sym = self.reg.symbols.get(name)
                tab = self.reg.tables.get(name)
                for pos, atom in enumerate(n[2]):
                    if atom == ("var", var):
                        if sym is not None:
                            found.add(sym.slots[pos])
                        elif tab is not None:
                            found.add(tab.shape[pos])
                for atom in n[3]:
                    if atom == ("var", var):
                        found.add(self.reg.dim)
            elif kind == "add":
                for _s, item in n[1]:
                    scan(item)
            elif kind == "mul":
                for item in n[1]:
                    scan(item)
            elif kind in ("neg",):
                scan(n[1])
            elif kind == "pow":
                scan(n[1])
            elif kind == "sum":
                if not any(b[0] == var for b in n[1]):
                    scan(n[2])

        scan(node)
        if len(found) == 1:
            return found.pop()
        if not found:
            raise GvcError("cannot infer a range for index %r" % var)
        raise GvcError("index %r is used with conflicting ranges %s"
                       % (var, sorted(found)))

    def eval(self, node, env):
        kind = node[0]
        if kind == "num":
            return node[1]
        if kind == "neg":
            return -self.eval(node[1], env)
        if kind == "add":
            total = Fraction(0)
            for sign, item in node[1]:
                val = self.eval(item, env)
                total = total + val if sign > 0 else total - val
            return total
        if kind == "mul":
            total = None
            for item in node[1]:
                val = self.eval(item, env)
                if isinstance(val, Fraction) and val == 0:
                    return Fraction(0)
                if isinstance(val, GradedPoly) and val.is_zero():
                    return Fraction(0)
                total = val if total is None else total * val
            return total
        if kind == "pow":
            return self.eval(node[1], env) ** node[2]
        if kind == "sum":
            total = Fraction(0)
            binders = [(v, r if r is not None else self.infer_range(v, node[2]))
                       for v, r in node[1]]

            def rec(depth, env2):
                nonlocal total
                if depth == len(binders):
                    total = total + self.eval(node[2], env2)
                    return
                var, rng = binders[depth]
                for i in range(rng):
                    env2[var] = i
                    rec(depth + 1, env2)
                del env2[var]

            rec(0, dict(env))
            return total
        if kind == "ref":
            name = node[1]
            comps = tuple(self.atom_value(a, env) for a in node[2])
            jets = tuple(self.atom_value(a, env) for a in node[3])
            tab = self.reg.tables.get(name)
            if tab is not None:
                if node[3]:
                    raise GvcError("constant table %r cannot carry jet indices" % name)
                return tab[comps]
            if name in self.reg.symbols:
                return self.reg.var(name, comps, jets)
            raise GvcError("unknown symbol %r" % name)
        raise GvcError("malformed expression node %r" % (kind,))

    def poly(self, node, env):
        val = self.eval(node, env)
        if isinstance(val, GradedPoly):
            return val
        return self.reg.const(val)


def _free_vars(atoms, bound):
    out = []
    for a in atoms:
        if a[0] == "var" and a[1] not in bound and a[1] not in out:
            out.append(a[1])
    return out


class _TheoryBuilder:
    """Drives statement parsing; owns the registry life cycle."""

    def __init__(self, text, jet_order=None, default_jet_order=None):
        self.p = _Parser(text)
        self.jet_order = jet_order
        self.default_jet_order = default_jet_order
        self.reg = None
        self.name = "theory"
        self.lagrangian = None
        self.records = []
        self.stages = {}
        self.gauge_candidate = None
        self.gamma = {}
        self.alphas = {}
        self.frozen = False

    def run(self):
        while not self.p.at("EOF"):
            self.statement()
        if self.reg is None:
            self.p.error("theory must declare a dimension")
        if self.lagrangian is None:
            self.p.error("theory must declare a Lagrangian")
        if not self.frozen:
            self.freeze()
        return TheorySpec(self.name, self.reg, self.lagrangian, self.records,
                          self.stages, self.gauge_candidate, self.gamma,
                          self.alphas)

    def freeze(self):
        for rec in self.records:
            _ = rec  # records already declared their ghosts
        self.reg.freeze()
        self.frozen = True

    def need_reg(self, tok):
        if self.reg is None:
            raise ParseError("dim must be declared first", tok[2], tok[3])

    def statement(self):
        tok = self.p.expect("NAME")
        word = tok[1]
        if word == "theory":
            self.name = self.p.expect("NAME")[1]
            self.p.expect(";")
        elif word == "dim":
            if self.reg is not None:
                raise ParseError("dim declared twice", tok[2], tok[3])
            dim = self.p.expect("INT")[1]
            self.p.expect(";")
            cap = self.jet_order
            if cap is None:
                cap = 4 if self.default_jet_order is None else self.default_jet_order
            try:
                self.reg = Registry(dim=dim, jet_order=cap)
            except (GvcError, ValueError) as exc:
                raise ParseError(str(exc), tok[2], tok[3])
        elif word == "jet_order":
            self.need_reg(tok)
            cap = self.p.expect("INT")[1]
            self.p.expect(";")
            if cap < 1:
                raise ParseError("jet_order must be positive", tok[2], tok[3])
            if self.jet_order is None:  # an explicit override wins over the file
                self.reg.jet_order = cap
        elif word == "table":
            self.table_stmt(tok)
        elif word == "field":
            self.field_stmt(tok)
        elif word == "L":
            self.lagrangian_stmt(tok)
        elif word == "ni":
            self.record_block(tok, stage=0)
        elif word == "stage":
            k = self.p.expect("INT")[1]
            self.record_block(tok, stage=k)
        elif word == "gauge":
            self.gauge_candidate = self.component_block(tok, self.gauge_candidate)
        elif word == "gamma":
            self.gamma = self.component_block(tok, self.gamma, ghosts_only=True)
        elif word == "alpha":
            k = self.p.expect("INT")[1]
            self.alphas[k] = self.component_block(tok, self.alphas.get(k))
        else:
            raise ParseError("unknown statement %r" % word, tok[2], tok[3])

    # -- declarations ---------------------------------------------------------

    def table_stmt(self, tok):
        self.need_reg(tok)
        name = self.p.expect("NAME")[1]
        self.p.expect("[")
        shape = [self.p.expect("INT")[1]]
        while self.p.at(","):
            self.p.next()
            shape.append(self.p.expect("INT")[1])
        self.p.expect("]")
        self.p.expect("{")
        entries = {}
        while not self.p.at("}"):
            self.p.expect("[")
            idx = [self.p.expect("INT")[1]]
            while self.p.at(","):
                self.p.next()
                idx.append(self.p.expect("INT")[1])
            self.p.expect("]")
            self.p.expect("=")
            entries[tuple(idx)] = self.rational()
            self.p.expect(";")
        self.p.next()
        try:
            self.reg.declare_table(name, tuple(shape), entries)
        except (GvcError, ValueError) as exc:
            raise ParseError(str(exc), tok[2], tok[3])

    def rational(self):
        sign = 1
        while self.p.at("-") or self.p.at("+"):
            if self.p.next()[0] == "-":
                sign = -sign
        num = self.p.expect("INT")[1]
        if self.p.at("/"):
            self.p.next()
            den = self.p.expect("INT")[1]
            return Fraction(sign * num, den)
        return Fraction(sign * num)

    def field_stmt(self, tok):
        self.need_reg(tok)
        if self.frozen:
            raise ParseError("field declared after gauge/gamma/alpha", tok[2], tok[3])
        name = self.p.expect("NAME")[1]
        slots = []
        if self.p.at("["):
            self.p.next()
            while not self.p.at("]"):
                slots.append(self.p.expect("INT")[1])
                if self.p.at(","):
                    self.p.next()
            self.p.next()
        symmetry = None
        if self.p.at("NAME", "sym") or self.p.at("NAME", "antisym"):
            symmetry = self.p.next()[1]
        ptok = self.p.expect("NAME")
        if ptok[1] == "even":
            parities = 0
        elif ptok[1] == "odd":
            parities = 1
        elif ptok[1] == "parity":
            tname = self.p.expect("NAME")[1]
            self.p.expect("@")
            slot = self.p.expect("INT")[1]
            tab = self.reg.tables.get(tname)
            if tab is None:
                raise ParseError("unknown parity table %r" % tname, ptok[2], ptok[3])
            if slot >= len(slots):
                raise ParseError("parity slot %d out of range" % slot, ptok[2], ptok[3])
            vec = []
            for i in range(slots[slot]):
                v = tab[(i,)]
                if v.denominator != 1 or v not in (0, 1):
                    raise ParseError("parity table entries must be 0 or 1",
                                     ptok[2], ptok[3])
                vec.append(int(v))
            parities = (slot, tuple(vec))
        else:
            raise ParseError("expected even, odd or parity", ptok[2], ptok[3])
        self.p.expect(";")
        try:
            self.reg.declare_field(name, tuple(slots), parities, symmetry)
        except (GvcError, ValueError) as exc:
            raise ParseError(str(exc), tok[2], tok[3])

    def lagrangian_stmt(self, tok):
        self.need_reg(tok)
        if self.lagrangian is not None:
            raise ParseError("L declared twice", tok[2], tok[3])
        self.p.expect("=")
        node = self.p.parse_expression()
        self.p.expect(";")
        try:
            self.lagrangian = _Eval(self.reg).poly(node, {})
        except (GvcError, ValueError) as exc:
            raise ParseError(str(exc), tok[2], tok[3])

    # -- record blocks ----------------------------------------------------------

    def label_binders(self):
        """``[i:RANGE, ...]`` after a ghost name; empty group for scalars."""
        self.p.expect("[")
        binders = []
        while not self.p.at("]"):
            var = self.p.expect("NAME")[1]
            self.p.expect(":")
            rng = self.p.expect("INT")[1]
            binders.append((var, rng))
            if self.p.at(","):
                self.p.next()
        self.p.next()
        return binders

    def record_block(self, tok, stage):
        self.need_reg(tok)
        if self.frozen:
            raise ParseError("records must come before gauge/gamma/alpha blocks",
                             tok[2], tok[3])
        if self.lagrangian is None:
            raise ParseError("records must come after the Lagrangian", tok[2], tok[3])
        ghost = self.p.expect("NAME")[1]
        binders = self.label_binders()
        self.p.expect("{")
        rows_stmts = []
        h_node = None
        while not self.p.at("}"):
            if self.p.at("NAME", "h"):
                htok = self.p.next()
                if stage == 0:
                    raise ParseError("h certificates belong to stage blocks",
                                     htok[2], htok[3])
                if h_node is not None:
                    raise ParseError("h declared twice", htok[2], htok[3])
                self.p.expect("{")
                h_node = self.p.parse_expression()
                self.p.expect("}")
                self.p.expect(";")
                continue
            rows_stmts.append(self.row_stmt())
        self.p.next()
        self.build_records(tok, stage, ghost, binders, rows_stmts, h_node)

    def row_stmt(self):
        tok = self.p.expect("(")
        name = self.p.expect("NAME")[1]
        comps, jets = self.p.parse_index_group()
        if self.p.at(";"):
            self.p.next()
            jets = self.p.parse_index_list(stop=(")",))
        self.p.expect(")")
        self.p.expect("=")
        node = self.p.parse_expression()
        self.p.expect(";")
        return (tok, name, comps, jets, node)

    def _expand_rows(self, stage, ghost_env, rows_stmts, evaluator):
        rows = {}
        for (tok, name, comps, jets, node) in rows_stmts:
            sym = self.reg.symbols.get(name)
            if sym is None:
                raise ParseError("unknown row target %r" % name, tok[2], tok[3])
            if stage == 0 and sym.kind != KIND_FIELD:
                raise ParseError("rows of an ni block must target fields",
                                 tok[2], tok[3])
            if stage >= 1 and not (sym.kind == KIND_GHOST and sym.stage == stage - 1):
                raise ParseError(
                    "rows of a stage-%d block must target stage-%d ghosts"
                    % (stage, stage - 1), tok[2], tok[3])
            if len(comps) != len(sym.slots):
                raise ParseError("%s expects %d component indices"
                                 % (name, len(sym.slots)), tok[2], tok[3])
            free = _free_vars(comps + jets, ghost_env)
            ranges = []
            for var in free:
                rng = None
                for pos, atom in enumerate(comps):
                    if atom == ("var", var):
                        rng = sym.slots[pos]
                        break
                if rng is None:
                    rng = self.reg.dim  # jets run over base directions
                ranges.append(rng)
            statement_rows = {}

            def emit(env):
                comp = tuple(evaluator.atom_value(a, env) for a in comps)
                jet = tuple(sorted(evaluator.atom_value(a, env) for a in jets))
                canon, sign = sym.canonicalize(comp)
                if sign == 0:
                    return
                for j in jet:
                    if j >= self.reg.dim:
                        raise GvcError("jet index %d out of range" % j)
                coeff = evaluator.poly(node, env)
                if sign != 1:
                    coeff = coeff.scale(sign)
                key = (name, canon, jet)
                if key in statement_rows:
                    if statement_rows[key] != coeff:
                        raise GvcError(
                            "row (%s[%s]; %s) receives conflicting values under "
                            "component symmetry" % (name, ",".join(map(str, canon)),
                                                    ",".join(map(str, jet))))
                else:
                    statement_rows[key] = coeff

            def rec(depth, env):
                if depth == len(free):
                    emit(env)
                    return
                for i in range(ranges[depth]):
                    env[free[depth]] = i
                    rec(depth + 1, env)
                del env[free[depth]]

            try:
                rec(0, dict(ghost_env))
            except (GvcError, ValueError) as exc:
                raise ParseError(str(exc), tok[2], tok[3])
            for key, coeff in statement_rows.items():
                if key in rows:
                    rows[key] = rows[key] + coeff
                else:
                    rows[key] = coeff
        return {k: v for k, v in rows.items() if not v.is_zero()}

    def build_records(self, tok, stage, ghost, binders, rows_stmts, h_node):
        if ghost in self.reg.symbols:
            raise ParseError("ghost %r declared twice" % ghost, tok[2], tok[3])
        evaluator = _Eval(self.reg)
        slots = tuple(rng for _v, rng in binders)
        produced = []  # (component, rows, parity)
        envs = [{}]
        for var, rng in binders:
            envs = [dict(e, **{var: i}) for e in envs for i in range(rng)]
        for env in envs:
            comp = tuple(env[var] for var, _rng in binders)
            rows = self._expand_rows(stage, env, rows_stmts, evaluator)
            if not rows:
                raise ParseError("record %s[%s] has no rows"
                                 % (ghost, ",".join(map(str, comp))), tok[2], tok[3])
            delta = self.reg.zero
            for (name, c, jet), coeff in rows.items():
                delta = delta + coeff * self.reg.var(name + "_bar", c, jet)
            par = delta.parity()
            if par is None:
                raise ParseError(
                    "record %s[%s] mixes Grassmann parities"
                    % (ghost, ",".join(map(str, comp))), tok[2], tok[3])
            produced.append((comp, rows, par))
        parities = self._parity_spec(tok, ghost, slots, produced)
        gh = self.reg.declare_ghost(ghost, stage=stage, slots=slots, parities=parities)
        self.reg.declare_ghost_antifield(gh)
        h_polys = {}
        if h_node is not None:
            for comp, _rows, _par in produced:
                env = {var: comp[i] for i, (var, _r) in enumerate(binders)}
                try:
                    h_polys[comp] = evaluator.poly(h_node, env)
                except (GvcError, ValueError) as exc:
                    raise ParseError(str(exc), tok[2], tok[3])
        for comp, rows, _par in produced:
            if stage == 0:
                self.records.append(NoetherRecord(ghost, comp, rows))
            else:
                self.stages.setdefault(stage, []).append(
                    StageRecord(stage, ghost, comp, rows, h_polys.get(comp)))

    def _parity_spec(self, tok, ghost, slots, produced):
        # the ghost inherits the parity of its record: [c^r] = [Delta_r]
        values = {comp: par for comp, _rows, par in produced}
        distinct = set(values.values())
        if len(distinct) == 1:
            return distinct.pop()
        for pos in range(len(slots)):
            by = {}
            ok = True
            for comp, par in values.items():
                if by.setdefault(comp[pos], par) != par:
                    ok = False
                    break
            if ok:
                return (pos, tuple(by[i] for i in range(slots[pos])))
        raise ParseError("ghost %r needs a parity depending on several indices"
                         % ghost, tok[2], tok[3])

    # -- component blocks (gauge / gamma / alpha) -------------------------------

    def component_block(self, tok, existing, ghosts_only=False):
        self.need_reg(tok)
        if self.lagrangian is None:
            raise ParseError("component blocks must come after the Lagrangian",
                             tok[2], tok[3])
        if not self.frozen:
            self.freeze()
        evaluator = _Eval(self.reg)
        out = dict(existing or {})
        self.p.expect("{")
        while not self.p.at("}"):
            rtok = self.p.expect("(")
            name = self.p.expect("NAME")[1]
            comps, jets = self.p.parse_index_group()
            if jets:
                raise ParseError("component keys carry no jet indices",
                                 rtok[2], rtok[3])
            self.p.expect(")")
            self.p.expect("=")
            node = self.p.parse_expression()
            self.p.expect(";")
            sym = self.reg.symbols.get(name)
            if sym is None:
                raise ParseError("unknown component target %r" % name,
                                 rtok[2], rtok[3])
            if ghosts_only and sym.kind != KIND_GHOST:
                raise ParseError("gamma components must target ghosts",
                                 rtok[2], rtok[3])
            if sym.kind == KIND_ANTIFIELD:
                raise ParseError("component keys cannot target antifields",
                                 rtok[2], rtok[3])
            if len(comps) != len(sym.slots):
                raise ParseError("%s expects %d component indices"
                                 % (name, len(sym.slots)), rtok[2], rtok[3])
            free = _free_vars(comps, {})
            ranges = []
            for var in free:
                rng = None
                for pos, atom in enumerate(comps):
                    if atom == ("var", var):
                        rng = sym.slots[pos]
                        break
                ranges.append(rng)

            def emit(env):
                comp = tuple(evaluator.atom_value(a, env) for a in comps)
                canon, sign = sym.canonicalize(comp)
                if sign == 0:
                    return
                val = evaluator.poly(node, env)
                if sign != 1:
                    val = val.scale(sign)
                key = (name, canon)
                if key in out and out[key] != val:
                    raise GvcError(
                        "component %s receives conflicting values"
                        % "%s[%s]" % (name, ",".join(map(str, canon))))
                out[key] = val

            def rec(depth, env):
                if depth == len(free):
                    emit(env)
                    return
                for i in range(ranges[depth]):
                    env[free[depth]] = i
                    rec(depth + 1, env)
                del env[free[depth]]

            try:
                rec(0, {})
            except (GvcError, ValueError) as exc:
                raise ParseError(str(exc), rtok[2], rtok[3])
        self.p.next()
        return out


def parse_theory(text, jet_order=None, default_jet_order=None):
    """Parse a theory-spec file into a TheorySpec.

    ``jet_order`` overrides any cap in the file; ``default_jet_order`` is
    used only when the file has no ``jet_order`` statement.
    """
    return _TheoryBuilder(text, jet_order, default_jet_order).run()


def parse_expr(text, registry):
    """Parse one expression against a frozen registry; returns a GradedPoly."""
    p = _Parser(text)
    node = p.parse_expression()
    tok = p.peek()
    if tok[0] != "EOF":
        raise ParseError("trailing input after expression", tok[2], tok[3])
    try:
        return _Eval(registry).poly(node, {})
    except (GvcError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc), 1, 1)
