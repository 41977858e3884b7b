"""Truncated arithmetic in the universal Novikov ring and its fraction field.

An element is a finite sum ``c_1 T^{e_1} + ... + c_k T^{e_k}`` with exact
rational coefficients and exponents, known modulo ``T^cutoff``.  A cutoff of
``INF`` marks an exact element (a finite sum with nothing dropped).

Every binary operation computes the largest cutoff at which its result is
still exact, so no digit is ever reported beyond proven precision.

Internally coefficients and exponents are ``gmpy2.mpq``; the accessors
(``valuation``, ``leading``, ``coefficient``, ``as_dict``) hand back
``fractions.Fraction``.  The two types compare and hash identically.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable, Mapping, Union

from gmpy2 import mpq

INF = math.inf

Rational = Union[int, Fraction, str]
# Exponents are Fractions; cutoffs and valuations may also be INF.
Exponent = Union[Fraction, float]


_MPQ = type(mpq(0))
_ZERO = mpq(0)
_ONE = mpq(1)


def _q(x):
    if isinstance(x, _MPQ):
        return x
    if isinstance(x, float):
        raise TypeError("exponents and coefficients must be exact rationals, got float %r" % x)
    if isinstance(x, str):
        return mpq(Fraction(x))
    return mpq(x)


def _frac(x):
    return x if x == INF else Fraction(int(x.numerator), int(x.denominator))


def _cut(x) -> Exponent:
    if x is None or x == INF:
        return INF
    return _q(x)


class NovikovScalar:
    """Immutable truncated Novikov series.

    ``terms`` is a tuple of ``(exponent, coefficient)`` pairs, exponents
    strictly increasing, no zero coefficient, every exponent below ``cutoff``.
    Equality is structural (terms and cutoff).
    """

    __slots__ = ("terms", "cutoff")

    def __init__(self, terms: Mapping | Iterable = (), cutoff=INF):
        cutoff = _cut(cutoff)
        acc = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for e, c in items:
            e, c = _q(e), _q(c)
            acc[e] = acc.get(e, _ZERO) + c
        clean = tuple(sorted((e, c) for e, c in acc.items() if c != 0 and e < cutoff))
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "cutoff", cutoff)

    def __setattr__(self, name, value):
        raise AttributeError("NovikovScalar is immutable")

    # -- constructors -------------------------------------------------------

    @classmethod
    def monomial(cls, coeff: Rational = 1, exponent: Rational = 0, cutoff=INF) -> "NovikovScalar":
        return cls({_q(exponent): _q(coeff)}, cutoff)

    @classmethod
    def const(cls, c: Rational, cutoff=INF) -> "NovikovScalar":
        return cls({_ZERO: _q(c)}, cutoff)

    @classmethod
    def zero(cls, cutoff=INF) -> "NovikovScalar":
        return cls((), cutoff)

    @classmethod
    def _raw(cls, terms: tuple, cutoff) -> "NovikovScalar":
        # trusted fast path: terms already canonical
        obj = object.__new__(cls)
        object.__setattr__(obj, "terms", terms)
        object.__setattr__(obj, "cutoff", cutoff)
        return obj

    # -- basic queries ------------------------------------------------------

    def _val(self):
        return self.terms[0][0] if self.terms else INF

    def valuation(self) -> Exponent:
        return _frac(self.terms[0][0]) if self.terms else INF

    def is_zero(self) -> bool:
        return not self.terms

    def is_exact(self) -> bool:
        return self.cutoff == INF

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def leading(self) -> tuple[Fraction, Fraction]:
        """(exponent, coefficient) of the lowest term."""
        if not self.terms:
            raise ValueError("zero element has no leading term")
        e, c = self.terms[0]
        return _frac(e), _frac(c)

    def coefficient(self, exponent: Rational) -> Fraction:
        e = _q(exponent)
        for ee, c in self.terms:
            if ee == e:
                return _frac(c)
        return Fraction(0)

    def as_dict(self) -> dict[Fraction, Fraction]:
        return {_frac(e): _frac(c) for e, c in self.terms}

    def is_zero_mod(self, E) -> bool:
        """True iff this element is known to vanish modulo T^E."""
        E = _cut(E)
        return self.cutoff >= E and all(e >= E for e, _ in self.terms)

    def congruent(self, other: "NovikovScalar", E) -> bool:
        return (self - other).is_zero_mod(E)

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "NovikovScalar":
        if isinstance(other, NovikovScalar):
            return other
        if isinstance(other, (int, Fraction, _MPQ)):
            return NovikovScalar.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return NovikovScalar._raw(tuple((e, -c) for e, c in self.terms), self.cutoff)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(self, -other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(other, -self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, invert(other))

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(other, invert(self))

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        if n < 0:
            return invert(self) ** (-n)
        result = NovikovScalar.const(1)
        base = self
        while n:
            if n & 1:
                result = mul(result, base)
            n >>= 1
            if n:
                base = mul(base, base)
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, _MPQ)):
            other = NovikovScalar.const(other)
        if not isinstance(other, NovikovScalar):
            return NotImplemented
        return self.terms == other.terms and self.cutoff == other.cutoff

    def __hash__(self):
        return hash((self.terms, self.cutoff))

    def __repr__(self):
        return "NovikovScalar(%r)" % format_novikov(self)

    def __str__(self):
        return format_novikov(self)


# -- arithmetic ------------------------------------------------------------


def valuation(x: NovikovScalar) -> Exponent:
    """Least exponent with nonzero coefficient; INF for zero."""
    return x.valuation()


def add(x: NovikovScalar, y: NovikovScalar) -> NovikovScalar:
    cutoff = min(x.cutoff, y.cutoff)
    acc = dict(x.terms)
    for e, c in y.terms:
        acc[e] = acc.get(e, 0) + c
    terms = tuple(sorted((e, c) for e, c in acc.items() if c != 0 and e < cutoff))
    return NovikovScalar._raw(terms, cutoff)


def mul_cutoff(x: NovikovScalar, y: NovikovScalar) -> Exponent:
    # x = x' + O(T^cx), y = y' + O(T^cy)  =>  xy = x'y' + O(T^c)
    cx, cy = x.cutoff, y.cutoff
    return min(cx + y._val(), cy + x._val(), cx + cy)


def mul(x: NovikovScalar, y: NovikovScalar) -> NovikovScalar:
    cutoff = mul_cutoff(x, y)
    acc = {}
    for e1, c1 in x.terms:
        for e2, c2 in y.terms:
            e = e1 + e2
            if e < cutoff:
                acc[e] = acc.get(e, 0) + c1 * c2
    terms = tuple(sorted((e, c) for e, c in acc.items() if c != 0))
    return NovikovScalar._raw(terms, cutoff)


def cap(x: NovikovScalar, E) -> NovikovScalar:
    """Lower the cutoff to ``min(cutoff, E)``; never raises."""
    E = _cut(E)
    if E >= x.cutoff:
        return x
    return NovikovScalar._raw(tuple(t for t in x.terms if t[0] < E), E)


def truncate(x: NovikovScalar, E) -> NovikovScalar:
    E = _cut(E)
    if E > x.cutoff:
        raise ValueError("cannot extend precision: requested %s beyond cutoff %s" % (E, x.cutoff))
    return cap(x, E)


def _unit_part(x: NovikovScalar):
    """Split x = c T^lam (1 + u) with valuation(u) > 0."""
    lam, c = x.terms[0]
    rel_cut = x.cutoff - lam
    u = NovikovScalar._raw(tuple((e - lam, a / c) for e, a in x.terms[1:]), rel_cut)
    return c, lam, u


def _support(gens, R) -> list[Fraction]:
    """Sorted exponents < R reachable from 0 by adding positive ``gens``."""
    seen = {_ZERO}
    frontier = [_ZERO]
    while frontier:
        nxt = []
        for s in frontier:
            for g in gens:
                t = s + g
                if t < R and t not in seen:
                    seen.add(t)
                    nxt.append(t)
        frontier = nxt
    return sorted(seen)


def _one_plus_u_pow(u: NovikovScalar, alpha: Fraction, R) -> NovikovScalar:
    """(1 + u)^alpha for valuation(u) > 0, modulo T^min(R, cutoff(u)).

    Applying D = T d/dT to s = (1+u)^alpha gives (1+u) Ds = alpha Du s, i.e.
    e s_e = sum_{e1} u_{e1} s_{e-e1} (alpha e1 - (e - e1)).
    """
    R = min(R, u.cutoff)
    uterms = [(e, c) for e, c in u.terms if e < R]
    s = {_ZERO: _ONE}
    for e in _support([e for e, _ in uterms], R)[1:]:
        acc = _ZERO
        for e1, c1 in uterms:
            if e1 > e:
                break
            prev = s.get(e - e1)
            if prev:
                acc += c1 * prev * (alpha * e1 - (e - e1))
        if acc:
            s[e] = acc / e
    return NovikovScalar._raw(tuple(sorted((e, c) for e, c in s.items() if c)), R)


def _exp_series(u: NovikovScalar, R) -> NovikovScalar:
    """exp(u) via e E_e = sum_{e1} e1 u_{e1} E_{e-e1}."""
    R = min(R, u.cutoff)
    uterms = [(e, c) for e, c in u.terms if e < R]
    E = {_ZERO: _ONE}
    for e in _support([e for e, _ in uterms], R)[1:]:
        acc = _ZERO
        for e1, c1 in uterms:
            if e1 > e:
                break
            prev = E.get(e - e1)
            if prev:
                acc += e1 * c1 * prev
        if acc:
            E[e] = acc / e
    return NovikovScalar._raw(tuple(sorted((e, c) for e, c in E.items() if c)), R)


def invert(x: NovikovScalar, prec=None) -> NovikovScalar:
    """Multiplicative inverse via the geometric series on x / (leading term).

    For an exact non-monomial ``x`` the inverse is an infinite series, so an
    absolute ``prec`` for the result must be supplied.
    """
    if x.is_zero():
        raise ZeroDivisionError("not invertible: zero element")
    c, lam, u = _unit_part(x)
    cutoff = x.cutoff - 2 * lam
    if prec is not None:
        cutoff = min(cutoff, _cut(prec))
    if cutoff == INF:
        if not u.terms:
            return NovikovScalar.monomial(1 / c, -lam)
        raise ValueError("inverse of an exact non-monomial needs a precision")
    s = _one_plus_u_pow(u, mpq(-1), cutoff + lam)
    return NovikovScalar._raw(tuple((e - lam, a / c) for e, a in s.terms), s.cutoff - lam)


def exp(x: NovikovScalar, prec=None) -> NovikovScalar:
    """sum x^n / n!, defined when valuation(x) > 0."""
    if x._val() <= 0:
        raise ValueError("exp undefined: valuation %s is not positive" % x.valuation())
    if x.is_zero():
        return NovikovScalar.const(1, x.cutoff)
    cutoff = x.cutoff if prec is None else min(x.cutoff, _cut(prec))
    if cutoff == INF:
        raise ValueError("exp of an exact series needs a precision")
    return _exp_series(x, cutoff)


def _rational_sqrt(c: Fraction) -> Fraction | None:
    if c <= 0:
        return None
    p, q = c.numerator, c.denominator
    rp, rq = math.isqrt(p), math.isqrt(q)
    if rp * rp == p and rq * rq == q:
        return Fraction(rp, rq)
    return None


def sqrt(x: NovikovScalar, prec=None) -> NovikovScalar:
    """Principal square root (positive leading coefficient)."""
    if x.is_zero():
        raise ValueError("sqrt of zero element is not defined to any precision")
    c, lam, u = _unit_part(x)
    r = _rational_sqrt(c)
    if r is None:
        raise ValueError("leading coefficient %s is not the square of a positive rational" % c)
    cutoff = x.cutoff - lam / 2
    if prec is not None:
        cutoff = min(cutoff, _cut(prec))
    if cutoff == INF:
        if not u.terms:
            return NovikovScalar.monomial(r, lam / 2)
        raise ValueError("sqrt of an exact non-monomial needs a precision")
    s = _one_plus_u_pow(u, mpq(1, 2), cutoff - lam / 2)
    return NovikovScalar._raw(tuple((e + lam / 2, a * r) for e, a in s.terms), s.cutoff + lam / 2)


def T(exponent: Rational = 1, coeff: Rational = 1) -> NovikovScalar:
    """Exact monomial coeff * T^exponent."""
    return NovikovScalar.monomial(coeff, exponent)


# -- text serialization -----------------------------------------------------


def format_novikov(x: NovikovScalar) -> str:
    parts = []
    for i, (e, c) in enumerate(x.terms):
        body = "%s*T^(%s)" % (abs(c), e)
        if i == 0:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append((" - " if c < 0 else " + ") + body)
    out = "".join(parts) or "0"
    if x.cutoff != INF:
        out += " + O(T^(%s))" % x.cutoff
    return out


_TERM = re.compile(
    r"""^(?:
        O\(T\^\((?P<cut>[^()]+)\)\)
      | (?P<coef>\d+(?:/\d+)?)(?:\*T\^(?:\((?P<e1>[^()]+)\)|(?P<e2>-?\d+(?:/\d+)?)))?
      | T\^(?:\((?P<e3>[^()]+)\)|(?P<e4>-?\d+(?:/\d+)?))
      | T
    )$""",
    re.VERBOSE,
)


def _split_signed(s: str):
    depth = 0
    start = 0
    sign = 1
    chunks = []
    i = 0
    s = s.strip()
    if s.startswith(("+", "-")):
        sign = -1 if s[0] == "-" else 1
        start = i = 1
    while i < len(s):
        ch = s[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch in "+-" and depth == 0:
            chunks.append((sign, s[start:i].strip()))
            sign = -1 if ch == "-" else 1
            start = i + 1
        i += 1
    chunks.append((sign, s[start:].strip()))
    return chunks


def parse_novikov(s: str) -> NovikovScalar:
    """Inverse of :func:`format_novikov`; also accepts ``3``, ``T``, ``T^(1/2)``."""
    terms: dict[Fraction, Fraction] = {}
    cutoff = INF
    for sign, chunk in _split_signed(s):
        m = _TERM.match(chunk.replace(" ", ""))
        if not m:
            raise ValueError("cannot parse Novikov term %r" % chunk)
        if m.group("cut") is not None:
            if sign < 0:
                raise ValueError("negative O-term in %r" % s)
            cutoff = Fraction(m.group("cut"))
            continue
        if m.group("coef") is not None:
            c = Fraction(m.group("coef"))
            e = m.group("e1") or m.group("e2") or "0"
        else:
            c = Fraction(1)
            e = m.group("e3") or m.group("e4") or "1"
        e = Fraction(e)
        terms[e] = terms.get(e, 0) + sign * c
    return NovikovScalar(terms, cutoff)
