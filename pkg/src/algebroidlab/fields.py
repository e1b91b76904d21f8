"""Polynomial scalar fields on a coordinate chart.

A ScalarField is a sparse multivariate polynomial with double coefficients,
keyed by exponent tuples. Evaluation and partial differentiation are exact
(no truncation), which is what makes every downstream identity checkable at
tight tolerances.
"""

from __future__ import annotations

import re

from .errors import (
    DimensionMismatchError,
    ExpressionSyntaxError,
    UnknownVariableError,
)


class Chart:
    """A coordinate chart: a dimension and coordinate labels.

    Dimension zero is allowed and models a point; fields on it are constants.
    """

    __slots__ = ("dimension", "labels")

    def __init__(self, dimension, labels=None):
        if dimension < 0:
            raise DimensionMismatchError("chart dimension must be >= 0")
        if labels is None:
            labels = tuple("x%d" % (i + 1) for i in range(dimension))
        else:
            labels = tuple(labels)
        if len(labels) != dimension:
            raise DimensionMismatchError(
                "expected %d labels, got %d" % (dimension, len(labels)))
        if len(set(labels)) != len(labels):
            raise DimensionMismatchError("coordinate labels must be distinct")
        self.dimension = dimension
        self.labels = labels

    def __eq__(self, other):
        return (isinstance(other, Chart)
                and self.dimension == other.dimension
                and self.labels == other.labels)

    def __hash__(self):
        return hash((self.dimension, self.labels))

    def __repr__(self):
        return "Chart(%d)" % self.dimension

    def check_point(self, p):
        p = tuple(float(v) for v in p)
        if len(p) != self.dimension:
            raise DimensionMismatchError(
                "point has length %d, chart dimension is %d"
                % (len(p), self.dimension))
        return p


def _fmt(x):
    # shortest round-trip float text, with integer values printed bare
    r = repr(float(x))
    if r.endswith(".0"):
        r = r[:-2]
    return r


class ScalarField:
    """Sparse polynomial: dict from exponent tuples to nonzero coefficients."""

    __slots__ = ("chart", "coeffs")

    def __init__(self, chart, coeffs=None):
        self.chart = chart
        clean = {}
        if coeffs:
            m = chart.dimension
            for exps, c in coeffs.items():
                c = float(c)
                if c == 0.0:
                    continue
                exps = tuple(int(e) for e in exps)
                if len(exps) != m or any(e < 0 for e in exps):
                    raise DimensionMismatchError(
                        "bad exponent tuple %r for chart of dimension %d"
                        % (exps, m))
                clean[exps] = clean.get(exps, 0.0) + c
                if clean[exps] == 0.0:
                    del clean[exps]
        self.coeffs = clean

    @classmethod
    def constant(cls, chart, value):
        return cls(chart, {(0,) * chart.dimension: float(value)})

    @classmethod
    def coordinate(cls, chart, i):
        if not 0 <= i < chart.dimension:
            raise DimensionMismatchError("no coordinate %d on %r" % (i, chart))
        e = [0] * chart.dimension
        e[i] = 1
        return cls(chart, {tuple(e): 1.0})

    # ------------------------------------------------------------------ algebra

    def _coerce(self, other):
        if isinstance(other, ScalarField):
            if other.chart != self.chart:
                raise DimensionMismatchError("fields live on different charts")
            return other
        if isinstance(other, (int, float)):
            return ScalarField.constant(self.chart, other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0.0) + c
        return ScalarField(self.chart, out)

    __radd__ = __add__

    def __neg__(self):
        return ScalarField(self.chart, {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return ScalarField(self.chart, out)

    __rmul__ = __mul__

    def __pow__(self, n):
        n = int(n)
        if n < 0:
            raise ValueError("negative powers are not polynomial")
        result = ScalarField.constant(self.chart, 1.0)
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other):
        return (isinstance(other, ScalarField)
                and self.chart == other.chart
                and self.coeffs == other.coeffs)

    # ------------------------------------------------------------- calculus

    def partial(self, i):
        if not 0 <= i < self.chart.dimension:
            raise DimensionMismatchError(
                "no coordinate %d on chart of dimension %d"
                % (i, self.chart.dimension))
        out = {}
        for e, c in self.coeffs.items():
            if e[i] == 0:
                continue
            d = list(e)
            d[i] -= 1
            out[tuple(d)] = out.get(tuple(d), 0.0) + c * e[i]
        return ScalarField(self.chart, out)

    def evaluate(self, p):
        p = self.chart.check_point(p)
        total = 0.0
        for e, c in self.coeffs.items():
            term = c
            for xi, ei in zip(p, e):
                if ei:
                    term *= xi ** ei
            total += term
        return total

    def is_zero(self):
        return not self.coeffs

    def is_constant(self):
        return all(sum(e) == 0 for e in self.coeffs)

    def constant_value(self):
        if not self.is_constant():
            raise ValueError("field is not constant")
        return self.coeffs.get((0,) * self.chart.dimension, 0.0)

    def max_abs_coeff(self):
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def total_degree(self):
        return max((sum(e) for e in self.coeffs), default=0)

    # ------------------------------------------------------------- printing

    def to_string(self):
        if not self.coeffs:
            return "0"
        labels = self.chart.labels
        parts = []
        for e, c in sorted(self.coeffs.items(), key=lambda kv: (sum(kv[0]), kv[0])):
            factors = []
            for i, ei in enumerate(e):
                if ei == 1:
                    factors.append(labels[i])
                elif ei > 1:
                    factors.append("%s^%d" % (labels[i], ei))
            mag = abs(c)
            if factors and mag == 1.0:
                body = "*".join(factors)
            elif factors:
                body = _fmt(mag) + "*" + "*".join(factors)
            else:
                body = _fmt(mag)
            parts.append(("-" if c < 0 else "+", body))
        sign, body = parts[0]
        text = ("-" if sign == "-" else "") + body
        for sign, body in parts[1:]:
            text += " %s %s" % (sign, body)
        return text

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return "ScalarField(%s)" % self.to_string()


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[+\-*^]))")


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ExpressionSyntaxError(
                "unexpected character %r at position %d" % (text[pos], pos))
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    return tokens


def parse_field(chart, text):
    """Parse an expression into a ScalarField.

    Grammar: terms joined by '+'/'-'; a term is '*'-separated factors, each a
    numeric literal or a coordinate name with an optional '^' integer power.
    Whitespace is ignored. Scientific notation is accepted so that printed
    fields re-parse exactly.
    """
    tokens = _tokenize(str(text))
    if not tokens:
        raise ExpressionSyntaxError("empty expression")
    labels = {name: i for i, name in enumerate(chart.labels)}
    m = chart.dimension
    result = {}
    i = 0
    n = len(tokens)

    def fail(msg, tok=None):
        where = tok[2] if tok else "end of input"
        raise ExpressionSyntaxError("%s (at %s)" % (msg, where))

    first = True
    while i < n:
        sign = 1.0
        if tokens[i][0] == "op" and tokens[i][1] in "+-":
            if tokens[i][1] == "-":
                sign = -1.0
            i += 1
        elif not first:
            fail("expected '+' or '-' between terms", tokens[i])
        first = False
        coeff = sign
        exps = [0] * m
        expect_factor = True
        while i < n:
            if not expect_factor:
                if tokens[i][0] == "op" and tokens[i][1] == "*":
                    i += 1
                    expect_factor = True
                    continue
                break
            if i >= n:
                fail("dangling operator")
            kind, value, _pos = tokens[i]
            if kind == "num":
                coeff *= float(value)
                i += 1
            elif kind == "name":
                if value not in labels:
                    raise UnknownVariableError(
                        "unknown variable %r on this chart" % value)
                power = 1
                i += 1
                if i < n and tokens[i][0] == "op" and tokens[i][1] == "^":
                    i += 1
                    if i >= n or tokens[i][0] != "num":
                        fail("'^' must be followed by an integer", tokens[i - 1])
                    ptext = tokens[i][1]
                    if not ptext.isdigit():
                        fail("power must be a non-negative integer", tokens[i])
                    power = int(ptext)
                    i += 1
                exps[labels[value]] += power
            else:
                fail("unexpected operator %r" % value, tokens[i])
            expect_factor = False
        if expect_factor:
            fail("term is missing a factor")
        key = tuple(exps)
        result[key] = result.get(key, 0.0) + coeff
    return ScalarField(chart, result)


def eval_partial(f, orders, p):
    """Differentiate f by the listed coordinate indices, then evaluate at p.

    orders is a sequence of 0-based coordinate indices, repeats allowed; an
    empty sequence means plain evaluation.
    """
    g = f
    for i in orders:
        g = g.partial(int(i))
    return g.evaluate(p)
