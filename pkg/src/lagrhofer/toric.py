"""Bulk-deformed toric potentials, their critical points, Jacobian-ring
idempotents, and the quantum-cohomology expansion that bounds the defect.

Only two-dimensional polytopes whose logarithmic critical equations separate
(every facet normal is +-e_j) are solved; coupled systems are rejected.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import novikov as nv
from .laurent import LaurentPolynomial
from .novikov import INF, NovikovScalar

DEFAULT_CUTOFF = Fraction(3)
# extra working precision spent on Newton lifting and T^{-1} rescalings
GUARD = Fraction(2)

FIXTURE_DIR = Path(__file__).with_name("fixtures")


@dataclass(frozen=True)
class Facet:
    normal: tuple[int, int]
    constant: Fraction

    def __call__(self, u: Sequence) -> Fraction:
        return self.normal[0] * Fraction(u[0]) + self.normal[1] * Fraction(u[1]) + self.constant


@dataclass(frozen=True)
class ToricFixture:
    facets: tuple[Facet, ...]
    bulk: tuple[NovikovScalar, ...]
    base_point: tuple[Fraction, Fraction]
    q_sign: int = 1
    name: str = ""
    notes: str = ""

    def __post_init__(self):
        if len(self.bulk) != len(self.facets):
            raise ValueError("need one bulk exponent per facet")
        if self.q_sign not in (1, -1):
            raise ValueError("q_sign must be +1 or -1, got %r" % self.q_sign)
        for i, f in enumerate(self.facets):
            if f(self.base_point) <= 0:
                raise ValueError("base point is not interior: l_%d(u0) = %s" % (i + 1, f(self.base_point)))
        if not _normals_bounded([f.normal for f in self.facets]):
            raise ValueError("polytope {l_i >= 0} is unbounded")
        normals = [f.normal for f in self.facets]
        if len(set(normals)) != len(normals):
            raise ValueError("repeated facet normal")

    @property
    def separated(self) -> bool:
        return all(sum(1 for a in f.normal if a) == 1 for f in self.facets)


def _normals_bounded(normals) -> bool:
    # {<v_i,u> + c_i >= 0} is bounded iff no direction d has <v_i,d> >= 0 for all i,
    # i.e. the normal angles leave no gap of at least pi.
    if len(normals) < 3:
        return False
    angles = sorted(math.atan2(b, a) for a, b in normals)
    gaps = [b - a for a, b in zip(angles, angles[1:])] + [angles[0] + 2 * math.pi - angles[-1]]
    return max(gaps) < math.pi - 1e-12


def bulk_parameter(tau) -> NovikovScalar:
    """a = T^{1/2 - tau} for rational tau in (0, 1/2)."""
    tau = Fraction(tau)
    if not 0 < tau < Fraction(1, 2):
        raise ValueError("tau must be a rational in (0, 1/2), got %s" % tau)
    return nv.T(Fraction(1, 2) - tau)


def _square(name, tau, q_sign, signs):
    a = bulk_parameter(tau)
    facets = (
        Facet((1, 0), Fraction(0)),
        Facet((0, 1), Fraction(0)),
        Facet((-1, 0), Fraction(1)),
        Facet((0, -1), Fraction(1)),
    )
    return ToricFixture(
        facets=facets,
        bulk=tuple(a * s for s in signs),
        base_point=(Fraction(1, 2), Fraction(1, 2)),
        q_sign=q_sign,
        name=name,
    )


def s2xs2_fixture(tau, q_sign: int = 1) -> ToricFixture:
    """Unit square with bulk exponents (a, -a, 0, 0).

    The printed potential has e^a y1 and e^{-a} y2 although the bulk class
    is written a PD[D1] + a PD[D2]; the signed bulk reproduces the printed
    potential.  The opposite sign convention leaves the valuation and the
    defect bound unchanged.
    """
    return _square("S2xS2", tau, q_sign, (1, -1, 0, 0))


def zero_bulk_fixture(q_sign: int = 1) -> ToricFixture:
    return ToricFixture(
        facets=_square("", Fraction(1, 4), 1, (0, 0, 0, 0)).facets,
        bulk=(NovikovScalar.zero(),) * 4,
        base_point=(Fraction(1, 2), Fraction(1, 2)),
        q_sign=q_sign,
        name="S2xS2-zero-bulk",
    )


def f2_0_fixture() -> ToricFixture:
    """0 <= u1 <= 2, 0 <= u2 <= 1 - u1/2, as four inequalities.

    u1 <= 2 touches the triangle only at the vertex (2, 0); it is kept so
    the potential carries one monomial per listed inequality.
    """
    return ToricFixture(
        facets=(
            Facet((1, 0), Fraction(0)),
            Facet((0, 1), Fraction(0)),
            Facet((-1, 0), Fraction(2)),
            Facet((-1, -2), Fraction(2)),
        ),
        bulk=(NovikovScalar.zero(),) * 4,
        base_point=(Fraction(1, 2), Fraction(1, 2)),
        name="F2(0)",
        notes="inequality u1 <= 2 is redundant (supports only the vertex (2,0))",
    )


# -- fixture files -------------------------------------------------------------

_A_MULT = re.compile(r"^\s*([+-]?\s*\d*(?:/\d+)?)\s*\*?\s*a\s*$")


def _parse_bulk(entry, a: NovikovScalar | None) -> NovikovScalar:
    if isinstance(entry, str):
        m = _A_MULT.match(entry)
        if m:
            if a is None:
                raise ValueError("fixture uses the bulk symbol 'a' but no tau was given")
            k = m.group(1).replace(" ", "")
            k = Fraction(1) if k in ("", "+") else Fraction(-1) if k == "-" else Fraction(k)
            return a * k
        return nv.parse_novikov(entry)
    return NovikovScalar.const(Fraction(entry))


def fixture_from_dict(data: dict, tau=None, q_sign: int | None = None) -> ToricFixture:
    """Build a fixture from its JSON form.

    Rationals are strings (``"1/2"``); bulk entries are Novikov text or a
    rational multiple of the bulk symbol ``a`` = T^{1/2 - tau}.
    """
    a = bulk_parameter(tau) if tau is not None else None
    facets = tuple(Facet(tuple(int(x) for x in f["normal"]), Fraction(f["constant"])) for f in data["facets"])
    bulk = tuple(_parse_bulk(b, a) for b in data.get("bulk", ["0"] * len(facets)))
    return ToricFixture(
        facets=facets,
        bulk=bulk,
        base_point=tuple(Fraction(x) for x in data["base_point"]),
        q_sign=int(q_sign if q_sign is not None else data.get("q_sign", 1)),
        name=data.get("name", ""),
        notes=data.get("notes", ""),
    )


def load_fixture(path, tau=None, q_sign: int | None = None) -> ToricFixture:
    path = Path(path)
    if not path.exists() and (FIXTURE_DIR / path).exists():
        path = FIXTURE_DIR / path
    with open(path) as fh:
        return fixture_from_dict(json.load(fh), tau=tau, q_sign=q_sign)


# -- potential -----------------------------------------------------------------


@dataclass(frozen=True)
class PotentialFunction:
    poly: LaurentPolynomial
    fixture: ToricFixture
    prec: Fraction

    def facet_monomial(self, i: int) -> LaurentPolynomial:
        v = self.fixture.facets[i].normal
        return LaurentPolynomial.monomial(v, self.poly.coefficient(v))

    def __str__(self):
        return str(self.poly)


def build_potential(fixture: ToricFixture, prec=DEFAULT_CUTOFF + GUARD) -> PotentialFunction:
    """sum_i exp(b_i) T^{l_i(u0)} y^{v_i}, then y_j -> y_j T^{-u0_j}.

    The rescaling leaves exp(b_i) T^{c_i} y^{v_i}, which for the shipped
    square is the familiar e^a y1 + e^{-a} y2 + T/y1 + T/y2.
    """
    prec = Fraction(prec)
    u0 = fixture.base_point
    terms = {}
    for f, b in zip(fixture.facets, fixture.bulk):
        coeff = nv.exp(b, prec) * nv.T(f(u0))
        terms[f.normal] = coeff
    poly = LaurentPolynomial(2, terms).rescale([-u0[0], -u0[1]])
    return PotentialFunction(poly, fixture, prec)


# -- critical points -----------------------------------------------------------


@dataclass(frozen=True)
class CriticalPoint:
    assignment: tuple[NovikovScalar, ...]
    label: tuple[Fraction, ...]

    @property
    def signs(self) -> tuple[int, ...]:
        return tuple(int(x) if x in (1, -1) else x for x in self.label)

    def truncate(self, E) -> "CriticalPoint":
        return CriticalPoint(tuple(nv.truncate(y, E) for y in self.assignment), self.label)


def _divisors(n: int) -> list[int]:
    n = abs(n)
    out = []
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            out.extend({d, n // d})
    return out


def rational_roots(coeffs: Sequence[Fraction]) -> list[Fraction]:
    """Distinct rational roots of sum coeffs[i] x^i (rational root test)."""
    coeffs = [Fraction(c) for c in coeffs]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    roots = []
    if len(coeffs) < 2:
        return roots
    lo = next(i for i, c in enumerate(coeffs) if c != 0)
    if lo:
        roots.append(Fraction(0))
        coeffs = coeffs[lo:]
    den = math.lcm(*(c.denominator for c in coeffs))
    ints = [int(c * den) for c in coeffs]
    for p in _divisors(ints[0]):
        for q in _divisors(ints[-1]):
            for x in (Fraction(p, q), Fraction(-p, q)):
                if x not in roots and sum(c * x**i for i, c in enumerate(ints)) == 0:
                    roots.append(x)
    return sorted(roots)


def _poly_eval(coeffs, x):
    return sum(c * x**i for i, c in enumerate(coeffs))


def _lower_hull(points):
    pts = sorted(points)
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def _univariate_eval(coeffs: dict[int, NovikovScalar], y: NovikovScalar, derivative=False):
    total = NovikovScalar.zero()
    inv = None
    for k, c in coeffs.items():
        e = k - 1 if derivative else k
        if derivative:
            c = c * k
        if e == 0:
            total = total + c
            continue
        if e < 0 and inv is None:
            inv = nv.invert(y)
        base = y if e > 0 else inv
        total = total + c * base ** abs(e)
    return total


def _newton_lift(coeffs, y, lam, ceiling, max_iter):
    """Newton iteration with the relative precision doubling per level.

    At each level the iterate is capped at T^(lam + rel) and refined until
    the correction vanishes there.  A converged cutoff short of the cap, or
    no better than the previous level's, means the coefficients limit the
    precision and we stop.  Exact coefficients would allow lifting forever,
    so ``ceiling`` bounds the requested cutoff.
    """
    rel = Fraction(1, 4)
    best = None
    for _ in range(max_iter):
        target = min(lam + rel, ceiling)
        # Newton corrects its own input, so the known terms may be taken exactly
        y = nv.cap(NovikovScalar._raw(y.terms, INF), target)
        step = _univariate_eval(coeffs, y) / _univariate_eval(coeffs, y, derivative=True)
        y_new = y - step
        if step.is_zero_mod(y_new.cutoff):
            if best is not None and y_new.cutoff <= best.cutoff:
                return best
            if y_new.cutoff < target or target == ceiling:
                return y_new
            best = y_new
            rel *= 2
        y = y_new
    raise RuntimeError("Newton lifting did not converge")


def univariate_roots(coeffs: dict[int, NovikovScalar], target, max_iter: int = 64) -> list[NovikovScalar]:
    """All roots of sum_k c_k y^k via Newton polygon + Newton lifting.

    Each edge of the lower Newton polygon of {(k, v(c_k))} fixes a root
    valuation; the edge's initial polynomial gives the leading coefficients,
    which must be simple and rational.  Each leading root is then lifted by
    Newton iteration until the correction vanishes below precision.
    """
    coeffs = {k: c for k, c in coeffs.items() if not c.is_zero()}
    if len(coeffs) < 2:
        raise ValueError("critical equation has no nonzero root")
    ceiling = min(c.cutoff for c in coeffs.values())
    if ceiling == INF:
        ceiling = Fraction(target) + GUARD
    hull = _lower_hull([(k, c.valuation()) for k, c in coeffs.items()])
    roots = []
    for (k0, v0), (k1, v1) in zip(hull, hull[1:]):
        lam = -(v1 - v0) / (k1 - k0)
        level = v0 + k0 * lam
        init = [Fraction(0)] * (k1 - k0 + 1)
        for k, c in coeffs.items():
            if k0 <= k <= k1 and c.valuation() + k * lam == level:
                init[k - k0] = c.leading()[1]
        leads = rational_roots(init)
        dinit = [i * c for i, c in enumerate(init)][1:]
        for x in leads:
            if _poly_eval(dinit, x) == 0:
                raise ValueError("degenerate critical point; unsupported (repeated leading root %s)" % x)
        if len(leads) != k1 - k0:
            raise ValueError(
                "leading-order equation %s has non-rational roots; unsupported" % init
            )
        for x in leads:
            y = _newton_lift(coeffs, nv.T(lam, x), lam, ceiling, max_iter)
            if y.cutoff < target:
                raise ValueError("root known only modulo T^%s, below requested T^%s" % (y.cutoff, target))
            roots.append(y)
    return roots


def _separated_equations(pf: PotentialFunction) -> list[dict[int, NovikovScalar]]:
    if not pf.fixture.separated:
        raise ValueError(
            "coupled critical-point equations (fixture %r has a mixed facet normal); unsupported"
            % pf.fixture.name
        )
    eqs = []
    for j in range(pf.poly.nvars):
        d = pf.poly.log_derivative(j)
        eqs.append({k[j]: c for k, c in d.coeffs.items()})
    return eqs


def solve_critical_points(pf: PotentialFunction, cutoff=DEFAULT_CUTOFF) -> list[CriticalPoint]:
    """Solutions of y_j dPO/dy_j = 0 for all j, each verified modulo T^cutoff.

    Points come in the order of itertools.product over per-variable roots,
    each list sorted by descending leading coefficient, so the square
    yields (+,+), (+,-), (-,+), (-,-).
    """
    cutoff = Fraction(cutoff)
    per_var = []
    for eq in _separated_equations(pf):
        rs = univariate_roots(eq, cutoff)
        rs.sort(key=lambda y: (y.valuation(), -y.leading()[1]))
        per_var.append(rs)
    points = []
    for combo in itertools.product(*per_var):
        pt = CriticalPoint(tuple(combo), tuple(y.leading()[1] for y in combo))
        for j in range(pf.poly.nvars):
            r = pf.poly.log_derivative(j).evaluate(pt.assignment)
            if not r.is_zero_mod(cutoff):
                raise ArithmeticError("critical equation %d not satisfied modulo T^%s: %s" % (j + 1, cutoff, r))
        points.append(pt)
    return points


# -- Jacobian ring -------------------------------------------------------------


def _roots_by_variable(points: Sequence[CriticalPoint]) -> list[list[NovikovScalar]]:
    nvars = len(points[0].assignment)
    out = []
    for j in range(nvars):
        seen: dict[tuple, NovikovScalar] = {}
        for p in points:
            y = p.assignment[j]
            seen.setdefault(y.leading(), y)
        out.append(list(seen.values()))
    n_expected = math.prod(len(r) for r in out)
    keys = {tuple(p.assignment[j].leading() for j in range(nvars)) for p in points}
    if len(keys) != len(points):
        raise ValueError("coincident critical points (equal leading terms)")
    if n_expected != len(points):
        raise ValueError("critical points do not form a product set; not separated")
    return out


def _lagrange_factor(nvars: int, j: int, roots: list[NovikovScalar], i: int) -> LaurentPolynomial:
    y = LaurentPolynomial.variable(nvars, j)
    out = LaurentPolynomial.constant(nvars, 1)
    for l, r in enumerate(roots):
        if l == i:
            continue
        denom = nv.invert(roots[i] - r)
        out = out * ((y - r) * denom)
    return out


def jacobian_idempotents(pf: PotentialFunction, points: Sequence[CriticalPoint]) -> list[LaurentPolynomial]:
    """Idempotent 1_p for each critical point p, by per-variable Lagrange
    interpolation; 1_p evaluates to 1 at p and 0 at the others."""
    _separated_equations(pf)
    roots = _roots_by_variable(points)
    nvars = pf.poly.nvars
    out = []
    for p in points:
        idem = LaurentPolynomial.constant(nvars, 1)
        for j in range(nvars):
            i = next(k for k, r in enumerate(roots[j]) if r.leading() == p.assignment[j].leading())
            idem = idem * _lagrange_factor(nvars, j, roots[j], i)
        out.append(idem)
    return out


def _solve_linear(matrix: list[list[NovikovScalar]], rhs: list[NovikovScalar]) -> list[NovikovScalar]:
    """Gaussian elimination over the Novikov field, pivoting on least valuation."""
    n = len(matrix)
    a = [list(row) + [b] for row, b in zip(matrix, rhs)]
    for col in range(n):
        piv = min(range(col, n), key=lambda r: a[r][col].valuation())
        if a[piv][col].is_zero():
            raise ValueError("basis images are linearly dependent")
        a[col], a[piv] = a[piv], a[col]
        inv = nv.invert(a[col][col])
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and not a[r][col].is_zero():
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def reduce_to_basis(poly: LaurentPolynomial, points: Sequence[CriticalPoint]) -> LaurentPolynomial:
    """Normal form in the Jacobian ring: exponents 0 <= k_j < (#roots in y_j).

    y_j^k is replaced by the interpolant of k-th powers of the y_j-roots.
    """
    roots = _roots_by_variable(points)
    nvars = poly.nvars
    cache: dict[tuple[int, int], list[NovikovScalar]] = {}

    def reduce_power(j, k):
        rs = roots[j]
        m = len(rs)
        if 0 <= k < m:
            return [NovikovScalar.const(1) if l == k else NovikovScalar.zero() for l in range(m)]
        if (j, k) not in cache:
            vand = [[r**l for l in range(m)] for r in rs]
            cache[(j, k)] = _solve_linear(vand, [r**k for r in rs])
        return cache[(j, k)]

    out = LaurentPolynomial(nvars)
    for k, c in poly.coeffs.items():
        acc = LaurentPolynomial.constant(nvars, c)
        for j, e in enumerate(k):
            coeffs = reduce_power(j, e)
            factor = LaurentPolynomial(
                nvars, {tuple(l if jj == j else 0 for jj in range(nvars)): a for l, a in enumerate(coeffs)}
            )
            acc = acc * factor
        out = out + acc
    return out


# -- quantum cohomology --------------------------------------------------------

BASIS_LABELS = ("e0", "e1", "e2", "e3")


@dataclass(frozen=True)
class QHClassExpansion:
    """Coefficients on e0 = PD[M], e1 = PD[D1], e2 = PD[D2], e3 = PD[D1 cap D2]."""

    coefficients: tuple[NovikovScalar, NovikovScalar, NovikovScalar, NovikovScalar]

    def __add__(self, other: "QHClassExpansion") -> "QHClassExpansion":
        return QHClassExpansion(tuple(a + b for a, b in zip(self.coefficients, other.coefficients)))

    def truncate(self, E) -> "QHClassExpansion":
        return QHClassExpansion(tuple(nv.truncate(c, E) for c in self.coefficients))

    def cap(self, E) -> "QHClassExpansion":
        return QHClassExpansion(tuple(nv.cap(c, E) for c in self.coefficients))

    def min_cutoff(self):
        return min(c.cutoff for c in self.coefficients)

    def congruent(self, other: "QHClassExpansion", E) -> bool:
        return all(a.congruent(b, E) for a, b in zip(self.coefficients, other.coefficients))

    def as_text(self) -> dict[str, str]:
        return {lab: nv.format_novikov(c) for lab, c in zip(BASIS_LABELS, self.coefficients)}

    def __str__(self):
        return " + ".join("(%s)*%s" % (c, lab) for lab, c in zip(BASIS_LABELS, self.coefficients))


def ks_basis_images(pf: PotentialFunction) -> list[LaurentPolynomial]:
    """Images of e0..e3: [1], the first two facet monomials, and q y^{v1+v2} T^{c1+c2}."""
    fx = pf.fixture
    f1, f2 = fx.facets[0], fx.facets[1]
    exps = tuple(a + b for a, b in zip(f1.normal, f2.normal))
    e3 = LaurentPolynomial.monomial(exps, nv.T(f1.constant + f2.constant, fx.q_sign))
    return [LaurentPolynomial.constant(2, 1), pf.facet_monomial(0), pf.facet_monomial(1), e3]


def ks_image(pf: PotentialFunction, cls: QHClassExpansion) -> LaurentPolynomial:
    out = LaurentPolynomial(2)
    for c, img in zip(cls.coefficients, ks_basis_images(pf)):
        out = out + img * c
    return out


def ks_transport(
    fixture: ToricFixture | PotentialFunction,
    idem: LaurentPolynomial,
    points: Sequence[CriticalPoint] | None = None,
    prec=DEFAULT_CUTOFF + GUARD,
) -> QHClassExpansion:
    """Pull a Jacobian-ring element back along the Kodaira-Spencer map.

    Without ``points`` the element must already be a combination of
    1, y1, y2, y1 y2; with them it is first reduced to that normal form.
    """
    pf = fixture if isinstance(fixture, PotentialFunction) else build_potential(fixture, prec)
    images = ks_basis_images(pf)
    if points is not None:
        idem = reduce_to_basis(idem, points)
        images = [reduce_to_basis(img, points) for img in images]
    basis = [(0, 0), (1, 0), (0, 1), (1, 1)]
    for poly in [idem] + images:
        extra = set(poly.coeffs) - set(basis)
        if extra:
            raise ValueError("not expressible in the monomial basis 1, y1, y2, y1*y2: %s" % sorted(extra))
    matrix = [[img.coefficient(b) for img in images] for b in basis]
    rhs = [idem.coefficient(b) for b in basis]
    return QHClassExpansion(tuple(_solve_linear(matrix, rhs)))


def qh_valuation(c: QHClassExpansion) -> Fraction:
    v = min(x.valuation() for x in c.coefficients)
    if v == INF:
        raise ValueError("valuation of the zero class is undefined")
    return v


def defect_bound(v) -> Fraction:
    """Defect estimate -12 v from the valuation of a field-factor idempotent."""
    v = Fraction(v)
    if v > 0:
        raise ValueError("idempotent valuation must be <= 0, got %s" % v)
    return -12 * v


# -- end-to-end ----------------------------------------------------------------


@dataclass
class DefectRun:
    tau: Fraction
    q_sign: int
    cutoff: Fraction
    fixture: ToricFixture
    potential: PotentialFunction
    points: list[CriticalPoint]
    idempotents: list[LaurentPolynomial]
    expansions: list[QHClassExpansion]
    valuations: list[Fraction]
    defect: Fraction
    checks: dict[str, bool] = field(default_factory=dict)


def displayed_idempotent(tau, eps: tuple[int, int], prec) -> LaurentPolynomial:
    """1/4 [1 + e1 e^{a/2} y1 T^{-1/2} + e2 e^{-a/2} y2 T^{-1/2} + e1 e2 y1 y2 T^{-1}]."""
    a = bulk_parameter(tau)
    half = a * Fraction(1, 2)
    e1, e2 = eps
    q = Fraction(1, 4)
    return LaurentPolynomial(
        2,
        {
            (0, 0): NovikovScalar.const(q),
            (1, 0): nv.exp(half, prec) * nv.T(Fraction(-1, 2), e1 * q),
            (0, 1): nv.exp(-half, prec) * nv.T(Fraction(-1, 2), e2 * q),
            (1, 1): nv.T(-1, e1 * e2 * q),
        },
    )


def displayed_expansion(tau, eps: tuple[int, int], q_sign: int, prec) -> QHClassExpansion:
    """1/4 (e0 + e1 e^{-a/2} T^{-1/2} e1 + e2 e^{a/2} T^{-1/2} e2 + e1 e2 q^{-1} T^{-1} e3)."""
    a = bulk_parameter(tau)
    half = a * Fraction(1, 2)
    e1, e2 = eps
    q = Fraction(1, 4)
    return QHClassExpansion(
        (
            NovikovScalar.const(q),
            nv.exp(-half, prec) * nv.T(Fraction(-1, 2), e1 * q),
            nv.exp(half, prec) * nv.T(Fraction(-1, 2), e2 * q),
            nv.T(-1, Fraction(e1 * e2, q_sign) * q),
        )
    )


def displayed_potential(tau, prec) -> LaurentPolynomial:
    a = bulk_parameter(tau)
    return LaurentPolynomial(
        2,
        {
            (1, 0): nv.exp(a, prec),
            (0, 1): nv.exp(-a, prec),
            (-1, 0): nv.T(1),
            (0, -1): nv.T(1),
        },
    )


def run_defect_pipeline(tau, q_sign: int = 1, cutoff=DEFAULT_CUTOFF, fixture: ToricFixture | None = None) -> DefectRun:
    """potential -> critical points -> idempotents -> QH expansions -> defect.

    All reported objects are truncated to ``cutoff``; the work is done with
    ``GUARD`` extra precision, and every truncation is checked to be legal.
    """
    tau = Fraction(tau)
    cutoff = Fraction(cutoff)
    prec = cutoff + GUARD
    fx = fixture if fixture is not None else s2xs2_fixture(tau, q_sign)
    pf = build_potential(fx, prec)
    points = solve_critical_points(pf, cutoff)
    idems = jacobian_idempotents(pf, points)
    exps = [ks_transport(pf, idem, points) for idem in idems]
    vals = [qh_valuation(e.truncate(cutoff)) for e in exps]
    defect = max(defect_bound(v) for v in vals)

    checks = {}
    nvars = pf.poly.nvars
    kron = True
    for i, idem in enumerate(idems):
        for j, p in enumerate(points):
            val = idem.evaluate(p.assignment)
            kron &= val.congruent(NovikovScalar.const(1 if i == j else 0), cutoff)
    checks["idempotents_kronecker"] = kron
    total = sum(idems[1:], idems[0])
    checks["idempotents_sum_to_one"] = total.congruent(LaurentPolynomial.constant(nvars, 1), cutoff)
    etotal = exps[0]
    for e in exps[1:]:
        etotal = etotal + e
    checks["expansions_sum_to_e0"] = etotal.congruent(
        QHClassExpansion((NovikovScalar.const(1),) + (NovikovScalar.zero(),) * 3), cutoff
    )
    checks["ks_roundtrip"] = all(
        reduce_to_basis(ks_image(pf, e), points).congruent(reduce_to_basis(idem, points), cutoff)
        for e, idem in zip(exps, idems)
    )
    if fixture is None:
        checks["potential_matches_display"] = pf.poly.congruent(displayed_potential(tau, prec), cutoff)
        checks["idempotents_match_display"] = all(
            idem.congruent(displayed_idempotent(tau, p.signs, prec), cutoff) for idem, p in zip(idems, points)
        )
        checks["expansions_match_display"] = all(
            e.congruent(displayed_expansion(tau, p.signs, q_sign, prec), cutoff) for e, p in zip(exps, points)
        )
    checks["valuation_is_minus_one"] = all(v == -1 for v in vals)
    checks["defect_is_12"] = defect == 12

    return DefectRun(
        tau=tau,
        q_sign=q_sign,
        cutoff=cutoff,
        fixture=fx,
        potential=PotentialFunction(pf.poly.truncate(cutoff), fx, cutoff),
        points=[p.truncate(cutoff) for p in points],
        idempotents=[i.truncate(cutoff) for i in idems],
        expansions=[e.truncate(cutoff) for e in exps],
        valuations=vals,
        defect=defect,
        checks=checks,
    )
