"""Reader and writer for ``.model`` files.

The format is line oriented, ``#`` starts a comment::

    model hp
    param a e
    field phi iso(3) momentum pi
    field A lorentz(4) momentum Pi
    define F[mu,nu] = (1/(a^3*e))*eps(i,j,k)*phi[i]*d(phi[j],mu)*d(phi[k],nu) + d(A[nu],mu) - d(A[mu],nu)
    lagrangian: -(1/4)*F[mu,nu]*F[mu,nu]
    discard A[0]
    generator R3 { A[mu] += -1 @ d(mu) }
    vacuum phi depth=2
    constraint zeta5: d(Pi[i],i) class=first gen=2
    match zeta5 candidate=D3 sign=1

A generator body may span several lines; rules are separated by ``;``.
Every statement is validated by expanding it, so index-range, arity and
unknown-symbol problems are reported with the line they come from.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .gauge import GeneratorRule
from .models import FieldModel, MatchExpectation, ReferenceSpec
from .params import PARAMS
from .tensor import (Add, Delta, Deriv, Div, Eps, Eta, FieldDecl, Mul, Node, Num, Pow, Scope, Sym, TensorError,
                     expand_table)

STATEMENTS = ("model", "param", "field", "define", "lagrangian", "discard", "generator", "vacuum", "constraint",
              "match")
CLASSES = ("first", "second", "unclassified")
ORIGINS = ("reference", "gauge-fixing", "dirac", "conjecture")


class ModelSyntaxError(ValueError):
    """Any problem with a model file; ``category`` tells which kind."""

    category = "syntax"

    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 category: str | None = None):
        self.line = line
        self.column = column
        if category:
            self.category = category
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(f"{where}{message}")


TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9']*)|(?P<op>\+=|[-+*/^()\[\],@{};:=]))")


@dataclass
class Token:
    kind: str
    text: str
    col: int


def tokenize(text: str, line: int, offset: int = 0) -> List[Token]:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = len(text) - len(text[pos:].lstrip())
            raise ModelSyntaxError(f"unexpected character {text[bad]!r}", line, offset + bad + 1)
        kind = m.lastgroup
        out.append(Token(kind, m.group(kind), offset + m.start(kind) + 1))
        pos = m.end()
    return out


class ExprParser:
    """Recursive-descent parser for index expressions."""

    def __init__(self, tokens: List[Token], line: int):
        self.toks = tokens
        self.i = 0
        self.line = line

    # helpers
    def peek(self, k: int = 0) -> Optional[Token]:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.peek()
        col = tok.col if tok else (self.toks[-1].col + len(self.toks[-1].text) if self.toks else 1)
        raise ModelSyntaxError(msg, self.line, col)

    def take(self, text: str | None = None, kind: str | None = None) -> Token:
        tok = self.peek()
        if tok is None:
            self.error(f"expected {text or kind}, found end of line")
        if (text is not None and tok.text != text) or (kind is not None and tok.kind != kind):
            self.error(f"expected {text or kind}, found {tok.text!r}", tok)
        self.i += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "op" and tok.text == text

    def done(self) -> bool:
        return self.i >= len(self.toks)

    # grammar
    def expr(self) -> Node:
        terms = [self.term()]
        while self.at("+") or self.at("-"):
            op = self.take().text
            t = self.term()
            terms.append(t if op == "+" else Mul((Num(-1), t)))
        return terms[0] if len(terms) == 1 else Add(tuple(terms))

    def term(self) -> Node:
        # products are kept flat so that printing and re-parsing give the same tree
        node = self.unary()
        factors = list(node.factors) if isinstance(node, Mul) else [node]
        while self.at("*") or self.at("/"):
            op = self.take().text
            rhs = self.unary()
            if op == "*":
                factors.extend(rhs.factors if isinstance(rhs, Mul) else [rhs])
            else:
                left = factors[0] if len(factors) == 1 else Mul(tuple(factors))
                factors = [Div(left, rhs)]
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))

    def unary(self) -> Node:
        if self.at("-"):
            self.take()
            inner = self.unary()
            if isinstance(inner, Num):
                return Num(-inner.value)
            return Mul((Num(-1),) + (inner.factors if isinstance(inner, Mul) else (inner,)))
        if self.at("+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.at("^"):
            self.take()
            sign = 1
            if self.at("-"):
                self.take()
                sign = -1
            n = int(self.take(kind="num").text)
            return Pow(base, sign * n)
        return base

    def index(self):
        tok = self.peek()
        if tok is None:
            self.error("expected an index")
        if tok.kind == "num":
            self.i += 1
            return int(tok.text)
        if tok.kind == "name":
            self.i += 1
            return tok.text
        self.error(f"expected an index, found {tok.text!r}", tok)

    def index_list(self, close: str) -> Tuple:
        out = []
        if self.at(close):
            return ()
        out.append(self.index())
        while self.at(","):
            self.take()
            out.append(self.index())
        return tuple(out)

    def atom(self) -> Node:
        tok = self.peek()
        if tok is None:
            self.error("expected an expression")
        if tok.kind == "num":
            self.i += 1
            return Num(int(tok.text))
        if self.at("("):
            self.take()
            e = self.expr()
            self.take(")")
            return e
        if tok.kind != "name":
            self.error(f"unexpected {tok.text!r}", tok)
        self.i += 1
        name = tok.text
        if name == "d" and self.at("("):
            self.take("(")
            inner = self.expr()
            idx: Tuple = ()
            if self.at(","):
                self.take()
                idx = self.index_list(")")
            self.take(")")
            if not idx:
                self.error("d(...) needs at least one derivative index", tok)
            return Deriv(inner, idx)
        if name in ("eps", "delta", "eta") and self.at("("):
            self.take("(")
            idx = self.index_list(")")
            self.take(")")
            return {"eps": Eps, "delta": Delta, "eta": Eta}[name](idx)
        if self.at("("):
            self.error(f"unknown function {name!r}", tok)
        if self.at("["):
            self.take("[")
            idx = self.index_list("]")
            self.take("]")
            return Sym(name, idx)
        return Sym(name)


def parse_expression(text: str, line: int = 1, offset: int = 0) -> Node:
    p = ExprParser(tokenize(text, line, offset), line)
    if p.done():
        raise ModelSyntaxError("empty expression", line, offset + 1)
    node = p.expr()
    if not p.done():
        p.error(f"unexpected {p.peek().text!r} after expression")
    return node


# ---------------------------------------------------------------------------
# statements

@dataclass
class _Source:
    text: str
    line: int


def _logical_lines(text: str) -> List[_Source]:
    """Strip comments and join generator bodies that span several lines."""
    out: List[_Source] = []
    pending: Optional[_Source] = None
    for n, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].rstrip()
        if pending is not None:
            pending.text += " " + body.strip()
            if "}" in body:
                out.append(pending)
                pending = None
            continue
        if not body.strip():
            continue
        src = _Source(body, n)
        if "{" in body and "}" not in body:
            pending = src
        else:
            out.append(src)
    if pending is not None:
        raise ModelSyntaxError("unterminated generator block", pending.line, len(pending.text))
    return out


_FIELD = re.compile(r"^field\s+(?P<name>\w+)\s+(?P<slot>iso|lorentz)\((?P<size>\d+)\)(?:\s+momentum\s+(?P<mom>\w+))?\s*$")
_DEFINE = re.compile(r"^define\s+(?P<name>\w+)\s*(?:\[(?P<idx>[^\]]*)\])?\s*=\s*(?P<body>.+)$")
_DISCARD = re.compile(r"^discard\s+(?P<field>\w+)\s*\[\s*(?P<comp>\d+)\s*\]\s*$")
_GENERATOR = re.compile(r"^generator\s+(?P<name>\w+)\s*\{(?P<body>.*)\}\s*$")
_RULE = re.compile(r"^\s*(?P<field>\w+)\s*\[\s*(?P<idx>\w+)\s*\]\s*\+=\s*(?P<expr>.+?)\s*@\s*d\((?P<derivs>[^)]*)\)\s*$")
_VACUUM = re.compile(r"^vacuum\s+(?P<field>\w+)\s+depth\s*=\s*(?P<depth>\d+)\s*$")
_CONSTRAINT = re.compile(r"^constraint\s+(?P<name>\w+)\s*:\s*(?P<rest>.+)$")
_OPTION = re.compile(r"\s+(?P<key>class|gen|origin)=(?P<value>[\w-]+)\s*$")
_MATCH = re.compile(r"^match\s+(?P<ref>\w+)\s+candidate=(?P<cand>\w+)\s+sign=(?P<sign>[-+]?1)(?:\s+chi=(?P<chi>.+))?\s*$")


def _idx_value(tok: str):
    tok = tok.strip()
    return int(tok) if tok.isdigit() else tok


@dataclass
class _Draft:
    name: str | None = None
    params: Tuple[str, ...] = ()
    fields: List[FieldDecl] = None
    momenta: dict = None
    defines: list = None
    lagrangian: Node | None = None
    discarded: list = None
    generators: list = None
    references: list = None
    vacuum: str | None = None
    depth: int | None = None
    expectations: list = None
    lines: dict = None

    def __post_init__(self):
        self.fields, self.momenta, self.defines = [], {}, []
        self.discarded, self.generators, self.references, self.expectations = [], [], [], []
        self.lines = {}


def parse_model(text: str) -> FieldModel:
    """Parse and validate a model file."""
    lines = _logical_lines(text)
    if not lines:
        raise ModelSyntaxError("empty model file", 1, 1)
    d = _Draft()
    for src in lines:
        _statement(d, src)
    if d.name is None:
        raise ModelSyntaxError("missing 'model NAME' statement", lines[0].line, 1)
    if d.lagrangian is None:
        raise ModelSyntaxError("missing 'lagrangian:' statement", lines[-1].line, 1)
    return _build(d)


def _statement(d: _Draft, src: _Source) -> None:
    text, line = src.text.strip(), src.line
    indent = len(src.text) - len(src.text.lstrip())
    head = text.split(None, 1)[0].rstrip(":")
    if head not in STATEMENTS:
        raise ModelSyntaxError(f"unknown statement {head!r}", line, indent + 1)
    col_of = lambda sub: indent + text.index(sub) + 1 if sub in text else indent + 1  # noqa: E731
    if head == "model":
        parts = text.split()
        if len(parts) != 2:
            raise ModelSyntaxError("expected 'model NAME'", line, indent + 1)
        d.name = parts[1]
    elif head == "param":
        names = tuple(text.split()[1:])
        for n in names:
            if n not in PARAMS:
                raise ModelSyntaxError(f"unknown parameter {n!r} (allowed: {', '.join(PARAMS)})", line,
                                       col_of(n), "unknown-symbol")
        d.params = names
    elif head == "field":
        m = _FIELD.match(text)
        if not m:
            raise ModelSyntaxError("expected 'field NAME iso(n)|lorentz(4) [momentum NAME]'", line, indent + 1)
        size = int(m["size"])
        if m["slot"] == "lorentz" and size != 4:
            raise ModelSyntaxError("lorentz fields have 4 components", line, col_of("lorentz"), "index-range")
        if size < 1:
            raise ModelSyntaxError("a field needs at least one component", line, col_of("("), "index-range")
        d.fields.append(FieldDecl(m["name"], m["slot"], size))
        if m["mom"]:
            d.momenta[m["name"]] = m["mom"]
    elif head == "define":
        m = _DEFINE.match(text)
        if not m:
            raise ModelSyntaxError("expected 'define NAME[i,j] = EXPR'", line, indent + 1)
        idx = tuple(s.strip() for s in m["idx"].split(",")) if m["idx"] else ()
        body = parse_expression(m["body"], line, indent + m.start("body"))
        d.defines.append((m["name"], idx, body))
        d.lines[("define", m["name"])] = line
    elif head == "lagrangian":
        _, _, rest = text.partition(":")
        if not rest.strip():
            raise ModelSyntaxError("expected 'lagrangian: EXPR'", line, indent + 1)
        d.lagrangian = parse_expression(rest, line, indent + text.index(":") + 1)
        d.lines["lagrangian"] = line
    elif head == "discard":
        m = _DISCARD.match(text)
        if not m:
            raise ModelSyntaxError("expected 'discard FIELD[n]'", line, indent + 1)
        d.discarded.append(((m["field"], int(m["comp"])), line))
    elif head == "generator":
        m = _GENERATOR.match(text)
        if not m:
            raise ModelSyntaxError("expected 'generator NAME { rule ; ... }'", line, indent + 1)
        rules = []
        body_off = indent + m.start("body")
        pos = 0
        for chunk in m["body"].split(";"):
            if chunk.strip():
                r = _RULE.match(chunk)
                if not r:
                    raise ModelSyntaxError("expected 'FIELD[i] += EXPR @ d(...)'", line,
                                           body_off + pos + len(chunk) - len(chunk.lstrip()) + 1)
                expr = parse_expression(r["expr"], line, body_off + pos + r.start("expr"))
                derivs = tuple(_idx_value(t) for t in r["derivs"].split(",") if t.strip())
                rules.append(GeneratorRule(r["field"], _idx_value(r["idx"]), expr, derivs))
            pos += len(chunk) + 1
        if not rules:
            raise ModelSyntaxError(f"generator {m['name']} has no rules", line, col_of("{"))
        d.generators.append((m["name"], tuple(rules)))
        d.lines[("generator", m["name"])] = line
    elif head == "vacuum":
        m = _VACUUM.match(text)
        if not m:
            raise ModelSyntaxError("expected 'vacuum FIELD depth=n'", line, indent + 1)
        depth = int(m["depth"])
        if depth not in (0, 1, 2):
            raise ModelSyntaxError("vacuum depth must be 0, 1 or 2", line, col_of("depth"), "index-range")
        d.vacuum, d.depth = m["field"], depth
        d.lines["vacuum"] = line
    elif head == "constraint":
        m = _CONSTRAINT.match(text)
        if not m:
            raise ModelSyntaxError("expected 'constraint NAME: EXPR [class=..] [gen=..] [origin=..]'", line,
                                   indent + 1)
        rest = m["rest"]
        opts = {}
        while True:
            o = _OPTION.search(rest)
            if not o:
                break
            opts[o["key"]] = o["value"]
            rest = rest[:o.start()]
        klass = opts.get("class", "unclassified")
        if klass not in CLASSES:
            raise ModelSyntaxError(f"unknown class {klass!r}", line, col_of("class="))
        origin = opts.get("origin", "reference")
        if origin not in ORIGINS:
            raise ModelSyntaxError(f"unknown origin {origin!r}", line, col_of("origin="))
        gen = opts.get("gen", "1")
        if not gen.isdigit() or int(gen) < 1:
            raise ModelSyntaxError("gen must be a positive integer", line, col_of("gen="))
        expr = parse_expression(rest, line, indent + m.start("rest"))
        d.references.append(ReferenceSpec(m["name"], expr, klass, int(gen), origin))
        d.lines[("constraint", m["name"])] = line
    elif head == "match":
        m = _MATCH.match(text)
        if not m:
            raise ModelSyntaxError("expected 'match REF candidate=NAME sign=±1 [chi=EXPR]'", line, indent + 1)
        chi = parse_expression(m["chi"], line, indent + m.start("chi")) if m["chi"] else None
        d.expectations.append(MatchExpectation(m["ref"], m["cand"], int(m["sign"]), chi))
        d.lines[("match", m["ref"])] = line


def _build(d: _Draft) -> FieldModel:
    scope = Scope(params=d.params)
    names = set()
    for f in d.fields:
        if f.name in names:
            raise ModelSyntaxError(f"field {f.name} declared twice", None, None)
        names.add(f.name)
        scope.declare(f)
    for f in d.fields:
        mom = d.momenta.get(f.name)
        if mom:
            scope.declare(FieldDecl(mom, f.slot, f.size, "momentum"))
    for name, idx, body in d.defines:
        scope.define(name, idx, body)
    discarded = set()
    for comp, line in d.discarded:
        decl = scope.decls.get(comp[0])
        if decl is None or decl.kind != "field":
            raise ModelSyntaxError(f"discard of unknown field {comp[0]!r}", line, None, "unknown-symbol")
        if comp[1] not in decl.components:
            raise ModelSyntaxError(f"{comp[0]} has no component {comp[1]}", line, None, "index-range")
        discarded.add(comp)
    if d.vacuum is not None and d.vacuum not in scope.decls:
        raise ModelSyntaxError(f"vacuum field {d.vacuum!r} is not declared", d.lines["vacuum"], None,
                               "unknown-symbol")
    refs = tuple(d.references)
    m = FieldModel(
        name=d.name, scope=scope, fields=tuple(d.fields), momenta=dict(d.momenta), lagrangian_expr=d.lagrangian,
        params=d.params, discarded=frozenset(discarded), generator_specs=tuple(d.generators),
        reference_specs=refs, defines=tuple(d.defines), vacuum=d.vacuum, ideal_depth=d.depth,
        expectations=tuple(d.expectations))
    _validate(m, d)
    return m


def _validate(m: FieldModel, d: _Draft) -> None:
    """Expand every part once so errors surface with their line numbers."""

    def guard(key, fn):
        try:
            return fn()
        except ModelSyntaxError:
            raise
        except TensorError as exc:
            raise ModelSyntaxError(str(exc), d.lines.get(key), None, exc.category) from exc
        except ValueError as exc:
            raise ModelSyntaxError(str(exc), d.lines.get(key), None, "index-discipline") from exc

    for name, idx, body in m.defines:
        guard(("define", name), lambda: expand_table(Sym(name, idx), m.scope))

    def lag():
        t = expand_table(m.lagrangian_expr, m.scope)
        if t.indices:
            raise ModelSyntaxError(f"lagrangian has free indices {', '.join(t.indices)}", d.lines["lagrangian"],
                                   None, "index-discipline")

    guard("lagrangian", lag)
    comps = {f.name: f.components for f in m.fields}
    from .gauge import generator_from_rules

    for name, rules in m.generator_specs:
        for r in rules:
            if r.field not in comps:
                raise ModelSyntaxError(f"generator {name} acts on unknown field {r.field!r}",
                                       d.lines[("generator", name)], None, "unknown-symbol")
            if isinstance(r.index, int) and r.index not in comps[r.field]:
                raise ModelSyntaxError(f"{r.field} has no component {r.index}", d.lines[("generator", name)], None,
                                       "index-range")
        guard(("generator", name), lambda: generator_from_rules(name, rules, m.scope, comps))
    for spec in m.reference_specs:
        def ref(spec=spec):
            t = expand_table(spec.expr, m.scope)
            if t.indices:
                raise ModelSyntaxError(f"constraint {spec.name} has free indices {', '.join(t.indices)}",
                                       d.lines[("constraint", spec.name)], None, "index-discipline")
        guard(("constraint", spec.name), ref)
    ref_names = {s.name for s in m.reference_specs}
    for ex in m.expectations:
        if ex.reference not in ref_names:
            raise ModelSyntaxError(f"match names unknown constraint {ex.reference!r}", d.lines[("match", ex.reference)],
                                   None, "unknown-symbol")
        if ex.chi_cofactor is not None:
            guard(("match", ex.reference), lambda ex=ex: expand_table(ex.chi_cofactor, m.scope))


# ---------------------------------------------------------------------------
# printing

def format_model(m: FieldModel) -> str:
    """Model file text that parses back to an equivalent model."""
    out = [f"model {m.name}"]
    if m.params:
        out.append("param " + " ".join(m.params))
    for f in m.fields:
        slot = f"{f.slot}({f.size})"
        mom = m.momenta.get(f.name)
        out.append(f"field {f.name} {slot}" + (f" momentum {mom}" if mom else ""))
    for name, idx, body in m.defines:
        head = f"{name}[{','.join(idx)}]" if idx else name
        out.append(f"define {head} = {body}")
    out.append(f"lagrangian: {m.lagrangian_expr}")
    for comp in sorted(m.discarded):
        out.append(f"discard {comp[0]}[{comp[1]}]")
    for name, rules in m.generator_specs:
        out.append(f"generator {name} {{ " + " ; ".join(str(r) for r in rules) + " }")
    if m.vacuum is not None:
        out.append(f"vacuum {m.vacuum} depth={m.ideal_depth}")
    for spec in m.reference_specs:
        out.append(f"constraint {spec.name}: {spec.expr} class={spec.klass} gen={spec.generation} "
                   f"origin={spec.origin}")
    for ex in m.expectations:
        line = f"match {ex.reference} candidate={ex.candidate} sign={ex.sign}"
        if ex.chi_cofactor is not None:
            line += f" chi={ex.chi_cofactor}"
        out.append(line)
    return "\n".join(out) + "\n"


def load_model(path) -> FieldModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


__all__ = ["ModelSyntaxError", "parse_model", "parse_expression", "format_model", "load_model", "tokenize"]
