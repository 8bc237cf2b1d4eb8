"""Defining-expression grammar, input files and a grammar-conforming serializer.

    expr   := ['-'] term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := atom ('^' nat)?
    atom   := rat ['i'] | 'i' | var | fn '(' expr ')' | '(' expr ')'
    fn     := re | im | conj | abs2

``re``/``im``/``conj``/``abs2`` use the conjugation that swaps z and zb and
conjugates coefficients; they are unavailable for map expressions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .hypersurface import (MAP_VARS, PHI_VARS, Q_VARS, SWAP, FormalMap, PhiForm, QForm,
                           validate_phi, validate_q)
from .series import GaussRat, MultiSeries

FORM_VARS = {"phi": PHI_VARS, "q": Q_VARS, "map": MAP_VARS}
FUNCTIONS = ("re", "im", "conj", "abs2")
DEFAULT_DEGREE = 16

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))")


class ExprSyntaxError(SyntaxError):
    def __init__(self, message: str, position: int, text: str = ""):
        super().__init__(f"{message} at position {position}")
        self.position = position
        self.text_input = text


class UnknownVariable(ExprSyntaxError):
    pass


class InputFileError(ValueError):
    pass


def _tokenize(text: str):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, vars, trunc: int):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.vars = tuple(vars)
        self.trunc = trunc
        self.has_swap = "z" in self.vars and "zb" in self.vars

    @property
    def tok(self):
        return self.toks[self.i]

    def _take(self, value=None, kind=None):
        k, v, p = self.tok
        if (value is not None and v != value) or (kind is not None and k != kind):
            want = value if value is not None else kind
            got = v or "end of input"
            raise ExprSyntaxError(f"expected {want!r}, found {got!r}", p, self.text)
        self.i += 1
        return v

    def _const(self, c) -> MultiSeries:
        return MultiSeries.constant(self.vars, GaussRat.coerce(c), self.trunc)

    def parse(self) -> MultiSeries:
        e = self.expr()
        if self.tok[0] != "end":
            raise ExprSyntaxError(f"unexpected {self.tok[1]!r}", self.tok[2], self.text)
        return e

    def expr(self) -> MultiSeries:
        sign = 1
        if self.tok[1] == "-":
            self._take("-")
            sign = -1
        acc = self.term().scale(sign)
        while self.tok[1] in ("+", "-"):
            op = self._take()
            t = self.term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term(self) -> MultiSeries:
        acc = self.factor()
        while self.tok[1] == "*":
            self._take("*")
            acc = acc * self.factor()
        return acc

    def factor(self) -> MultiSeries:
        base = self.atom()
        if self.tok[1] == "^":
            self._take("^")
            k = int(self._take(kind="num"))
            base = base ** k
        return base

    def _swap(self, e: MultiSeries, name: str, pos: int) -> MultiSeries:
        if not self.has_swap:
            raise ExprSyntaxError(f"{name}() needs the variables z and zb", pos, self.text)
        return e.conj_swap(SWAP)

    def atom(self) -> MultiSeries:
        kind, v, pos = self.tok
        if kind == "num":
            q = Fraction(int(self._take()))
            if self.tok[1] == "/":
                self._take("/")
                den = int(self._take(kind="num"))
                if den == 0:
                    raise ExprSyntaxError("zero denominator", self.tok[2], self.text)
                q = q / den
            if self.tok[0] == "name" and self.tok[1] == "i":
                self._take("i")
                return self._const(GaussRat(0, q))
            return self._const(q)
        if kind == "name":
            self._take()
            if v == "i":
                return self._const(GaussRat(0, 1))
            if v in FUNCTIONS:
                self._take("(")
                inner = self.expr()
                self._take(")")
                if v == "conj":
                    return self._swap(inner, v, pos)
                if v == "abs2":
                    return inner * self._swap(inner, v, pos)
                bar = self._swap(inner, v, pos)
                if v == "re":
                    return (inner + bar).scale(GaussRat(Fraction(1, 2)))
                return (inner - bar).scale(GaussRat(0, Fraction(-1, 2)))
            if v not in self.vars:
                raise UnknownVariable(f"unknown variable {v!r} (expected one of {', '.join(self.vars)})",
                                      pos, self.text)
            return MultiSeries.variable(self.vars, v, self.trunc)
        if v == "(":
            self._take("(")
            inner = self.expr()
            self._take(")")
            return inner
        raise ExprSyntaxError(f"unexpected {v or 'end of input'!r}", pos, self.text)


def parse_expr(text: str, vars=PHI_VARS, trunc: int = DEFAULT_DEGREE) -> MultiSeries:
    """Exact series for ``text`` over ``vars``, truncated at total degree ``trunc``."""
    return _Parser(text, vars, trunc).parse()


def _rat_text(q) -> str:
    q = Fraction(int(q.numerator), int(q.denominator))
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def coeff_text(c: GaussRat) -> str:
    """Coefficient in the input grammar, e.g. ``3/2``, ``-1/3 i``, ``(1/2 - 2 i)``."""
    re_, im_ = Fraction(int(c.re.numerator), int(c.re.denominator)), \
        Fraction(int(c.im.numerator), int(c.im.denominator))
    if not im_:
        return _rat_text(re_) if re_ >= 0 else "-" + _rat_text(-re_)
    if not re_:
        mag = "i" if abs(im_) == 1 else _rat_text(abs(im_)) + " i"
        return mag if im_ > 0 else "-" + mag
    sign = "+" if im_ > 0 else "-"
    head = _rat_text(re_) if re_ > 0 else "-" + _rat_text(-re_)
    return f"({head} {sign} {_rat_text(abs(im_))} i)"


def format_expr(series: MultiSeries) -> str:
    """Grammar-conforming text for an exact series; parse_expr inverts it."""
    pieces = []
    for e, c in series.sorted_items():
        mono = [f"{v}^{x}" if x > 1 else v for v, x in zip(series.vars, e) if x]
        neg = (not c.im and c.re < 0) or (not c.re and c.im < 0)
        body = coeff_text(-c if neg else c)
        if mono:
            body = "*".join(mono) if body == "1" else body + "*" + "*".join(mono)
        pieces.append(("-" if neg else "+", body))
    if not pieces:
        return "0"
    out = ("-" if pieces[0][0] == "-" else "") + pieces[0][1]
    for sign, body in pieces[1:]:
        out += f" {sign} {body}"
    return out


@dataclass(frozen=True)
class HypersurfaceFile:
    form: str
    expr: str
    truncation: int = DEFAULT_DEGREE
    mode: str = "exact"
    precision: int = 256

    def series(self, degree: int | None = None) -> MultiSeries:
        D = self.truncation if degree is None else degree
        return parse_expr(self.expr, FORM_VARS[self.form], D)

    def load(self, degree: int | None = None):
        """The validated PhiForm or QForm (for q-form the implicit leading tau is added)."""
        s = self.series(degree)
        if self.form == "phi":
            return validate_phi(s)
        tau = MultiSeries.variable(Q_VARS, "tau", s.trunc)
        return validate_q(tau + s)


@dataclass(frozen=True)
class MapFile:
    F: str
    G: str
    truncation: int = DEFAULT_DEGREE

    def load(self, degree: int | None = None) -> FormalMap:
        D = self.truncation if degree is None else degree
        H = FormalMap(parse_expr(self.F, MAP_VARS, D), parse_expr(self.G, MAP_VARS, D))
        if H.jacobian_det().is_zero():
            raise InputFileError("map has a singular linear part")
        return H


def _read_pairs(text: str) -> dict:
    pairs = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InputFileError(f"line {n}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if len(value) >= 2 and value[0] == value[-1] == '"':
            value = value[1:-1]
        if key in pairs:
            raise InputFileError(f"line {n}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def _int(pairs, key, default):
    try:
        return int(pairs.get(key, default))
    except ValueError:
        raise InputFileError(f"{key} must be an integer") from None


def read_hypersurface(text: str) -> HypersurfaceFile:
    pairs = _read_pairs(text)
    unknown = set(pairs) - {"form", "expr", "truncation", "mode", "precision"}
    if unknown:
        raise InputFileError(f"unknown keys: {', '.join(sorted(unknown))}")
    if "expr" not in pairs:
        raise InputFileError("missing expr")
    form = pairs.get("form", "phi")
    if form not in ("phi", "q"):
        raise InputFileError("form must be phi or q")
    mode = pairs.get("mode", "exact")
    if mode not in ("exact", "ball"):
        raise InputFileError("mode must be exact or ball")
    return HypersurfaceFile(form, pairs["expr"], _int(pairs, "truncation", DEFAULT_DEGREE),
                            mode, _int(pairs, "precision", 256))


def read_map(text: str) -> MapFile:
    pairs = _read_pairs(text)
    unknown = set(pairs) - {"F", "G", "truncation"}
    if unknown:
        raise InputFileError(f"unknown keys: {', '.join(sorted(unknown))}")
    if "F" not in pairs or "G" not in pairs:
        raise InputFileError("a map file needs F and G")
    return MapFile(pairs["F"], pairs["G"], _int(pairs, "truncation", DEFAULT_DEGREE))
