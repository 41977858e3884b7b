import json
from fractions import Fraction

import pytest

import oracles
from lagrhofer import novikov as nv
from lagrhofer import toric
from lagrhofer.laurent import LaurentPolynomial
from lagrhofer.novikov import NovikovScalar, T

F = Fraction
TAU = F(1, 4)
CUT = F(3)


def _poly_to_oracle(poly):
    return {k: c.as_dict() for k, c in poly.coeffs.items()}


# -- potential ---------------------------------------------------------------


def test_potential_matches_hand_formula():
    pf = toric.build_potential(toric.s2xs2_fixture(TAU), CUT)
    expect = oracles.displayed_potential(TAU, CUT)
    assert _poly_to_oracle(pf.poly.truncate(CUT)) == expect


def test_potential_zero_bulk():
    pf = toric.build_potential(toric.zero_bulk_fixture(), CUT)
    assert pf.poly == LaurentPolynomial(2, {(1, 0): 1, (0, 1): 1, (-1, 0): T(), (0, -1): T()})


@pytest.mark.parametrize("tau", [F(1, 8), F(1, 3), F(3, 8)])
def test_potential_other_tau(tau):
    pf = toric.build_potential(toric.s2xs2_fixture(tau), CUT)
    assert _poly_to_oracle(pf.poly.truncate(CUT)) == oracles.displayed_potential(tau, CUT)


def test_f2_0_potential_has_one_monomial_per_inequality():
    fx = toric.f2_0_fixture()
    pf = toric.build_potential(fx, CUT)
    assert len(pf.poly) == 4
    ineqs = [(f.normal, f.constant) for f in fx.facets]
    # the independent vertex enumeration sees a triangle
    assert oracles.polytope_vertices(ineqs) == [(0, 0), (0, 1), (2, 0)]
    assert oracles.facet_inequalities(ineqs) == [0, 1, 3]


def test_bulk_parameter_range():
    assert toric.bulk_parameter(F(1, 4)) == T(F(1, 4))
    for bad in (0, F(1, 2), F(3, 4)):
        with pytest.raises(ValueError):
            toric.bulk_parameter(bad)


# -- fixtures -------------------------------------------------------------------


def test_fixture_validation():
    facets = toric.s2xs2_fixture(TAU).facets
    zeros = (NovikovScalar.zero(),) * 4
    with pytest.raises(ValueError, match="interior"):
        toric.ToricFixture(facets, zeros, (F(0), F(1, 2)))
    with pytest.raises(ValueError, match="unbounded"):
        toric.ToricFixture(facets[:2], zeros[:2], (F(1, 2), F(1, 2)))
    with pytest.raises(ValueError, match="q_sign"):
        toric.ToricFixture(facets, zeros, (F(1, 2), F(1, 2)), q_sign=2)
    with pytest.raises(ValueError, match="bulk"):
        toric.ToricFixture(facets, zeros[:3], (F(1, 2), F(1, 2)))


def test_shipped_fixture_files_load():
    fx = toric.load_fixture(toric.FIXTURE_DIR / "s2xs2.json", tau=TAU)
    assert fx.facets == toric.s2xs2_fixture(TAU).facets
    assert fx.bulk == toric.s2xs2_fixture(TAU).bulk
    fx2 = toric.load_fixture(toric.FIXTURE_DIR / "f2_0.json")
    assert fx2.facets == toric.f2_0_fixture().facets
    assert not fx2.separated


def test_fixture_from_json_roundtrip(tmp_path):
    data = json.loads((toric.FIXTURE_DIR / "s2xs2.json").read_text())
    data["q_sign"] = -1
    path = tmp_path / "fx.json"
    path.write_text(json.dumps(data))
    fx = toric.load_fixture(path, tau=F(1, 8))
    assert fx.q_sign == -1
    assert fx.bulk[0] == T(F(3, 8))


# -- critical points -----------------------------------------------------------------


def test_zero_bulk_critical_points():
    pf = toric.build_potential(toric.zero_bulk_fixture(), CUT + toric.GUARD)
    pts = toric.solve_critical_points(pf, CUT)
    assert [p.signs for p in pts] == [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    for p in pts:
        for y, e in zip(p.assignment, p.signs):
            assert y.congruent(T(F(1, 2), e), CUT)


def test_critical_points_match_hand_formula():
    pf = toric.build_potential(toric.s2xs2_fixture(TAU), CUT + toric.GUARD)
    for p in toric.solve_critical_points(pf, CUT):
        y1, y2 = oracles.critical_point(TAU, *p.signs, CUT)
        assert nv.truncate(p.assignment[0], CUT).as_dict() == y1
        assert nv.truncate(p.assignment[1], CUT).as_dict() == y2


def test_rational_roots():
    assert sorted(toric.rational_roots([-1, 0, 1])) == [-1, 1]
    assert toric.rational_roots([1, 0, 1]) == []
    assert sorted(toric.rational_roots([0, -4, 0, 1])) == [-2, 0, 2]
    assert toric.rational_roots([F(-1, 4), 0, 1]) in ([F(1, 2), F(-1, 2)], [F(-1, 2), F(1, 2)])


def test_univariate_roots_degenerate():
    coeffs = {0: NovikovScalar.const(1), 1: NovikovScalar.const(-2), 2: NovikovScalar.const(1)}
    with pytest.raises(ValueError, match="degenerate"):
        toric.univariate_roots(coeffs, CUT)


def test_univariate_roots_non_rational():
    coeffs = {0: NovikovScalar.const(-2), 2: NovikovScalar.const(1)}
    with pytest.raises(ValueError, match="non-rational"):
        toric.univariate_roots(coeffs, CUT)


def test_univariate_roots_lift_exact():
    # y^2 - (1 + T) has roots +-(1 + T/2 - T^2/8 + ...)
    coeffs = {0: -(1 + T()), 2: NovikovScalar.const(1)}
    roots = toric.univariate_roots(coeffs, 3)
    assert len(roots) == 2
    for r in roots:
        assert (r * r).congruent(1 + T(), 3)


def test_coupled_equations_rejected():
    pf = toric.build_potential(toric.f2_0_fixture(), CUT)
    with pytest.raises(ValueError, match="coupled"):
        toric.solve_critical_points(pf, CUT)


# -- idempotents and KS transport -----------------------------------------------------


def test_idempotents_match_hand_formula():
    run = toric.run_defect_pipeline(TAU)
    for idem, p in zip(run.idempotents, run.points):
        expect = oracles.displayed_idempotent(TAU, *p.signs, CUT)
        got = _poly_to_oracle(idem)
        assert {k: v for k, v in got.items() if v} == expect


def test_expansions_match_hand_formula():
    run = toric.run_defect_pipeline(TAU)
    for e, p in zip(run.expansions, run.points):
        expect = oracles.displayed_expansion(TAU, *p.signs, 1, CUT)
        assert [c.as_dict() for c in e.coefficients] == expect


def test_ks_unit_maps_to_e0():
    pf = toric.build_potential(toric.s2xs2_fixture(TAU))
    e = toric.ks_transport(pf, LaurentPolynomial.constant(2, 1))
    assert e.coefficients[0] == NovikovScalar.const(1)
    assert all(c.is_zero() for c in e.coefficients[1:])


def test_ks_rejects_non_basis_monomial():
    pf = toric.build_potential(toric.s2xs2_fixture(TAU))
    with pytest.raises(ValueError, match="monomial basis"):
        toric.ks_transport(pf, LaurentPolynomial.monomial((2, 0)))


def test_q_sign_changes_top_coefficient_only():
    plus = toric.run_defect_pipeline(TAU, q_sign=1)
    minus = toric.run_defect_pipeline(TAU, q_sign=-1)
    assert minus.defect == 12
    assert all(minus.checks.values())
    for a, b in zip(plus.expansions, minus.expansions):
        assert a.coefficients[:3] == b.coefficients[:3]
        assert a.coefficients[3] == -b.coefficients[3]


# -- valuation and defect --------------------------------------------------------------


def test_qh_valuation():
    e = toric.QHClassExpansion((NovikovScalar.const(1), T(F(-1, 2)), T(2), NovikovScalar.zero()))
    assert toric.qh_valuation(e) == F(-1, 2)
    with pytest.raises(ValueError):
        toric.qh_valuation(toric.QHClassExpansion((NovikovScalar.zero(),) * 4))


def test_defect_bound():
    assert toric.defect_bound(-1) == 12
    assert toric.defect_bound(F(-1, 2)) == 6
    assert toric.defect_bound(0) == 0
    with pytest.raises(ValueError):
        toric.defect_bound(F(1, 4))


@pytest.mark.parametrize("tau", [F(1, 8), F(1, 5), F(1, 3), F(3, 8)])
def test_pipeline_across_tau(tau):
    run = toric.run_defect_pipeline(tau)
    assert run.defect == 12
    assert run.valuations == [-1] * 4
    assert all(run.checks.values()), run.checks


def test_pipeline_zero_bulk_fixture():
    run = toric.run_defect_pipeline(TAU, fixture=toric.zero_bulk_fixture())
    assert run.defect == 12
    assert all(run.checks.values())


def test_pipeline_outputs_are_truncated():
    run = toric.run_defect_pipeline(TAU)
    assert run.potential.poly.min_cutoff() == CUT
    for p in run.points:
        assert all(y.cutoff == CUT for y in p.assignment)
    for e in run.expansions:
        assert e.min_cutoff() == CUT
    assert nv.valuation(run.points[0].assignment[0]) == F(1, 2)
