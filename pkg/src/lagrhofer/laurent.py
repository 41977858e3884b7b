"""Laurent polynomials in y_1..y_n over truncated Novikov coefficients."""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

from .novikov import INF, NovikovScalar, cap, invert, mul

Exps = tuple  # tuple[int, ...]


class LaurentPolynomial:
    """Sparse map from integer exponent vectors to NovikovScalar coefficients.

    Exactly-zero coefficients are dropped; a coefficient that is zero only
    modulo its cutoff is kept so its precision stays visible.  Equality is
    structural.
    """

    __slots__ = ("nvars", "coeffs")

    def __init__(self, nvars: int, coeffs: Mapping[Exps, NovikovScalar] | None = None):
        self.nvars = nvars
        clean: dict[Exps, NovikovScalar] = {}
        for k, c in (coeffs or {}).items():
            k = tuple(int(i) for i in k)
            if len(k) != nvars:
                raise ValueError("exponent %r does not have %d entries" % (k, nvars))
            if not isinstance(c, NovikovScalar):
                c = NovikovScalar.const(c)
            if k in clean:
                c = clean[k] + c
            clean[k] = c
        self.coeffs = {k: c for k, c in clean.items() if not (c.is_zero() and c.is_exact())}

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff=1) -> "LaurentPolynomial":
        return cls(len(exps), {tuple(exps): coeff})

    @classmethod
    def variable(cls, nvars: int, j: int) -> "LaurentPolynomial":
        exps = [0] * nvars
        exps[j] = 1
        return cls.monomial(exps)

    @classmethod
    def constant(cls, nvars: int, c) -> "LaurentPolynomial":
        return cls(nvars, {(0,) * nvars: c})

    def monomials(self) -> list[Exps]:
        return sorted(self.coeffs)

    def coefficient(self, exps: Sequence[int]) -> NovikovScalar:
        return self.coeffs.get(tuple(exps), NovikovScalar.zero())

    def __len__(self):
        return len(self.coeffs)

    def __iter__(self):
        return iter(sorted(self.coeffs.items()))

    def _check(self, other: "LaurentPolynomial"):
        if other.nvars != self.nvars:
            raise ValueError("variable count mismatch: %d vs %d" % (self.nvars, other.nvars))

    def _lift(self, other):
        if isinstance(other, LaurentPolynomial):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction, NovikovScalar)):
            return LaurentPolynomial.constant(self.nvars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out[k] + c if k in out else c
        return LaurentPolynomial(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPolynomial(self.nvars, {k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out: dict[Exps, NovikovScalar] = {}
        for k1, c1 in self.coeffs.items():
            for k2, c2 in other.coeffs.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                p = mul(c1, c2)
                out[k] = out[k] + p if k in out else p
        return LaurentPolynomial(self.nvars, out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, LaurentPolynomial):
            return NotImplemented
        return self.nvars == other.nvars and self.coeffs == other.coeffs

    def __repr__(self):
        return "LaurentPolynomial(%s)" % self

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for k, c in self:
            mono = "*".join("y%d^%d" % (j + 1, e) for j, e in enumerate(k) if e)
            parts.append("(%s)%s" % (c, "*" + mono if mono else ""))
        return " + ".join(parts)

    # -- calculus and substitution -----------------------------------------

    def log_derivative(self, j: int) -> "LaurentPolynomial":
        """y_j * d/dy_j."""
        return LaurentPolynomial(
            self.nvars, {k: c * k[j] for k, c in self.coeffs.items() if k[j]}
        )

    def rescale(self, shifts: Sequence) -> "LaurentPolynomial":
        """Substitute y_j -> y_j * T^{shifts[j]}."""
        out = {}
        for k, c in self.coeffs.items():
            s = sum((Fraction(a) * b for a, b in zip(shifts, k)), Fraction(0))
            out[k] = mul(c, NovikovScalar.monomial(1, s))
        return LaurentPolynomial(self.nvars, out)

    def cap(self, E) -> "LaurentPolynomial":
        return LaurentPolynomial(self.nvars, {k: cap(c, E) for k, c in self.coeffs.items()})

    def truncate(self, E) -> "LaurentPolynomial":
        from .novikov import truncate

        return LaurentPolynomial(self.nvars, {k: truncate(c, E) for k, c in self.coeffs.items()})

    def min_cutoff(self):
        return min((c.cutoff for c in self.coeffs.values()), default=INF)

    def evaluate(self, point: Sequence[NovikovScalar]) -> NovikovScalar:
        if len(point) != self.nvars:
            raise ValueError("point has %d coordinates, expected %d" % (len(point), self.nvars))
        powers: dict[tuple[int, int], NovikovScalar] = {}

        def power(j, e):
            if (j, e) not in powers:
                base = point[j] if e > 0 else invert(point[j])
                powers[(j, e)] = base ** abs(e)
            return powers[(j, e)]

        total = NovikovScalar.zero()
        for k, c in self.coeffs.items():
            term = c
            for j, e in enumerate(k):
                if e:
                    term = mul(term, power(j, e))
            total = total + term
        return total

    def is_zero_mod(self, E) -> bool:
        return all(c.is_zero_mod(E) for c in self.coeffs.values())

    def congruent(self, other: "LaurentPolynomial", E) -> bool:
        return (self - other).is_zero_mod(E)
