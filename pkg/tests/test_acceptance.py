"""Acceptance criteria 1-8, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v``; a one-line PASS/FAIL per
criterion is printed in the terminal summary.
"""

import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

import oracles
from lagrhofer import geometry as geo
from lagrhofer import novikov as nv
from lagrhofer import qmcalc as qm
from lagrhofer import toric
from lagrhofer.cli import cmd_defect
from lagrhofer.novikov import INF, NovikovScalar

TAUS = [Fraction(1, 8), Fraction(1, 4), Fraction(3, 8)]
SIGNS = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
CUT = Fraction(3)


def _nov(d, cutoff=CUT):
    return NovikovScalar(d, cutoff)


@pytest.mark.criterion(1, "defect pipeline reproduces potential, points, idempotents, expansions, v=-1, D=12 in <1s")
@pytest.mark.parametrize("tau", TAUS, ids=str)
def test_criterion_1_defect_pipeline(tau):
    t0 = time.perf_counter()
    report = cmd_defect(tau)
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0, "runtime %.3fs" % elapsed
    assert report["failures"] == []
    assert report["defect"] == "12"
    assert report["valuations"] == ["-1"] * 4

    run = toric.run_defect_pipeline(tau)
    for k, series in oracles.displayed_potential(tau, CUT).items():
        assert run.potential.poly.coefficient(k) == _nov(series)
    assert len(run.potential.poly) == 4

    assert len(run.points) == 4
    for p, (e1, e2) in zip(run.points, SIGNS):
        assert p.signs == (e1, e2)
        y1, y2 = oracles.critical_point(tau, e1, e2, CUT)
        assert p.assignment == (_nov(y1), _nov(y2))

    for idem, (e1, e2) in zip(run.idempotents, SIGNS):
        expect = oracles.displayed_idempotent(tau, e1, e2, CUT)
        assert set(idem.coeffs) == set(expect)
        for k, series in expect.items():
            assert idem.coefficient(k) == _nov(series)

    for exp_, (e1, e2) in zip(run.expansions, SIGNS):
        expect = oracles.displayed_expansion(tau, e1, e2, 1, CUT)
        assert exp_.coefficients == tuple(_nov(s) for s in expect)
        # leading coefficients 1/4, +-1/4 T^{-1/2}, +-1/4 T^{-1}
        lead = [c.leading() for c in exp_.coefficients]
        assert lead == [(0, Fraction(1, 4)), (Fraction(-1, 2), Fraction(e1, 4)),
                        (Fraction(-1, 2), Fraction(e2, 4)), (-1, Fraction(e1 * e2, 4))]
    assert run.valuations == [-1] * 4
    assert run.defect == 12


@pytest.mark.criterion(2, "idempotents give the Kronecker delta at the critical points and sum to 1 modulo T^3")
@pytest.mark.parametrize("tau", TAUS, ids=str)
def test_criterion_2_idempotent_algebra(tau):
    # work at the pipeline's guarded precision, compare modulo T^3
    pf = toric.build_potential(toric.s2xs2_fixture(tau), CUT + toric.GUARD)
    points = toric.solve_critical_points(pf, CUT)
    idems = toric.jacobian_idempotents(pf, points)
    one = NovikovScalar.const(1)
    zero = NovikovScalar.zero()
    for i, idem in enumerate(idems):
        for j, p in enumerate(points):
            val = idem.evaluate(p.assignment)
            assert val.cutoff >= CUT
            assert val.congruent(one if i == j else zero, CUT)
    total = idems[0]
    for idem in idems[1:]:
        total = total + idem
    assert total.min_cutoff() >= CUT
    assert total.is_zero_mod(CUT) is False
    assert (total - 1).is_zero_mod(CUT)


@pytest.mark.criterion(3, "embedding identities to 1e-12 on 1e4 random inputs; inverse round trip to 1e-10")
@pytest.mark.parametrize("delta", [0.55, 0.75, 0.95, 1.0])
def test_criterion_3_embedding_facts(delta):
    rng = np.random.default_rng(3)
    n = 10_000
    z = np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n)) * (1 - 1e-9)
    V = geo.theta_delta_array(z, delta)
    assert np.max(np.abs(V[:, 0] - (2 * delta * np.abs(z) ** 2 - 1))) <= 1e-12
    assert np.max(np.abs(np.sum(V * V, -1) - 1)) <= 1e-12
    assert np.max(np.abs(V - oracles.theta_projective(z, delta))) <= 1e-12

    circle = np.exp(2j * np.pi * rng.random(n)) / math.sqrt(2 * delta)
    assert np.max(np.abs(geo.theta_delta_array(circle, delta)[:, 0])) <= 1e-12
    real = (2 * rng.random(n) - 1) * (1 - 1e-9)
    assert np.max(np.abs(geo.theta_delta_array(real, delta)[:, 2])) <= 1e-12

    # random sphere points inside the image
    g = rng.normal(size=(3 * n, 3))
    S = g / np.linalg.norm(g, axis=1, keepdims=True)
    S = S[S[:, 0] < 2 * delta - 1][:n]
    back = geo.theta_delta_array(geo.theta_delta_inverse_array(S, delta), delta)
    assert np.max(np.abs(back - S)) <= 1e-10


@pytest.mark.criterion(4, "conformal area ratio within 1e-6 of delta at quadrature 2048 in <1s")
def test_criterion_4_conformal_factor():
    t0 = time.perf_counter()
    for delta in (0.6, 0.8, 1.0):
        for r in (0.3, 0.7):
            ratio = geo.conformal_area_check(delta, r, 2048)
            assert abs(ratio - delta) <= 1e-6
            cap = oracles.cap_area_half_form(2 * delta * r * r - 1)
            assert abs(ratio * 2 * math.pi * r * r - cap) <= 1e-6
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion(5, "torus extent, containment threshold and flip, moment map of torus samples")
def test_criterion_5_torus_geometry():
    for tau in (0.1, 0.25, 0.4, 0.5):
        V, W = geo.sample_torus_arrays(tau, (720, 720))
        ext = math.sqrt(1 - tau * tau)
        assert abs(np.max(np.abs(V[:, 0])) - ext) <= 1e-4
        assert abs(np.max(np.abs(W[:, 0])) - ext) <= 1e-4
        u = geo.moment_map_array(V, W)
        assert np.max(np.abs(u - np.array([tau, 1 - tau]))) <= 1e-9
    star = (2 + math.sqrt(3)) / 4
    assert abs(geo.min_delta_for_containment(0.5) - star) <= 2 * math.ulp(star)
    assert geo.torus_in_image(0.5, star + 1e-3, (720, 720))
    assert not geo.torus_in_image(0.5, star - 1e-3, (720, 720))


@pytest.mark.criterion(6, "infinite-diameter table at delta=1 matches (h - 12/(8 pi^2))/2 and increases")
def test_criterion_6_diameter_table():
    defect, valuation = qm.certified_defect(Fraction(1, 4))
    assert (defect, valuation) == (12, -1)
    hs = [1, 10, 100]
    certs = qm.diameter_table(1.0, hs, defect=float(defect))
    bounds = [c.lower_bound for c in certs]
    for h, b in zip(hs, bounds):
        closed = (h - 12 / (8 * math.pi ** 2)) / 2
        assert abs(b - closed) <= 2 * math.ulp(closed)
    assert bounds[0] < bounds[1] < bounds[2]
    slope = (bounds[2] - bounds[1]) / 90
    assert abs(slope - 0.5) <= 1e-12


def _random_bump(rng):
    c = rng.uniform(0.35, 0.65)
    w = rng.uniform(0.1, min(c - 0.06, 0.94 - c))
    h = rng.uniform(0.5, 3.0) * rng.choice([-1, 1])
    return qm.FunctionSample.bump(c, w, h)


@pytest.mark.criterion(7, "Phi_delta pipeline: constancy 1e-8, sup vs mu 1e-6, Poisson ratio >= 3, 100 certificates, <30s")
def test_criterion_7_phi_pipeline():
    t0 = time.perf_counter()
    delta = 0.95
    rng = np.random.default_rng(7)
    bumps = [_random_bump(rng) for _ in range(5)]
    xs = np.linspace(0.08, 0.92, 10)
    for f in bumps:
        ft = qm.build_tilde_f(f, delta)
        eps = ft.epsilon
        for x in xs:
            tau = float(qm.interval_to_tau(x, eps))
            z1, z2 = qm.torus_preimage(tau, delta, (360, 360))
            vals = ft(0.0, z1, z2)
            assert np.ptp(vals) <= 1e-8
            assert abs(np.mean(vals) - float(f(x))) <= 1e-8

    for f, g in zip(bumps, bumps[1:]):
        sup, x_star = qm.sup_norm_and_argmax(f, g)
        ft, gt = qm.build_tilde_f(f, delta), qm.build_tilde_f(g, delta)
        tau_star = float(qm.interval_to_tau(x_star, ft.epsilon))
        ev = qm.evaluate_mu(ft - gt, qm.SuperheavySet.torus(tau_star), delta, tau_star)
        assert ev.conclusive
        assert abs(abs(ev.value) - sup) <= 1e-6

    f, g = bumps[0], bumps[1]
    ft, gt = qm.build_tilde_f(f, delta), qm.build_tilde_f(g, delta)
    eps = ft.epsilon
    # a point where both functions vary, slightly off the torus
    diff = np.abs(f.values) * np.abs(g.values)
    x = float(f.grid[int(np.argmax(diff))])
    z1, z2 = qm.torus_preimage(float(qm.interval_to_tau(x, eps)), delta, (8, 8))
    z1 = z1 * (1 + 1e-4)
    r_h, r_h2, ratio = qm.poisson_convergence(ft, gt, z1, z2, 1e-3 * eps)
    assert ratio >= 3, (r_h, r_h2)

    for _ in range(100):
        f, g = _random_bump(rng), _random_bump(rng)
        if rng.random() < 0.1:
            g = f
        cert = qm.phi_bound_certificate(f, g, delta, grid=(60, 60))
        assert cert.lower_bound <= cert.upper_bound
    assert time.perf_counter() - t0 < 30


def _rand_q(rng, num=9, den=4):
    return Fraction(rng.randint(-num, num), rng.randint(1, den))


def _rand_nov(rng, nonzero=True, positive_val=False, cutoff=None):
    while True:
        lo = 1 if positive_val else -4
        exps = {Fraction(rng.randint(lo, 10), 4) for _ in range(rng.randint(1, 4))}
        terms = {e: _rand_q(rng) for e in exps}
        if cutoff is None:
            cutoff = rng.choice([Fraction(3), Fraction(5, 2), Fraction(7, 2), INF])
        x = NovikovScalar(terms, cutoff)
        if not nonzero or not x.is_zero():
            return x


@pytest.mark.criterion(8, "1e3 randomized ultrametric, multiplicativity and round-trip identities, exact modulo cutoff")
def test_criterion_8_novikov_properties():
    rng = random.Random(8)
    for _ in range(1000):
        x, y, z = _rand_nov(rng), _rand_nov(rng), _rand_nov(rng)
        s = x + y
        if not s.is_zero():
            assert s.valuation() >= min(x.valuation(), y.valuation())
        if x.valuation() != y.valuation():
            assert s.valuation() == min(x.valuation(), y.valuation())
        assert (x * y).valuation() == x.valuation() + y.valuation()
        c = min((x * y * z).cutoff, 3)
        assert ((x * y) * z).congruent(x * (y * z), c)
        assert (x * (y + z)).congruent(x * y + x * z, min((x * (y + z)).cutoff, 3))
        assert (x * y) == (y * x)

        inv = nv.invert(x, prec=3)
        one = x * inv
        assert one.cutoff > 0 and one.congruent(NovikovScalar.const(1), one.cutoff)

        u = _rand_nov(rng, positive_val=True, cutoff=Fraction(3))
        e = nv.exp(u) * nv.exp(-u)
        assert e.cutoff == 3 and e.congruent(NovikovScalar.const(1), 3)

        r = _rand_nov(rng, cutoff=Fraction(3))
        lam, lead = r.leading()
        r = r * NovikovScalar.monomial(Fraction(1) if lead > 0 else Fraction(-1), 0)
        sq = r * r
        root = nv.sqrt(sq)
        assert (root * root).congruent(sq, (root * root).cutoff)
        assert root.congruent(r, root.cutoff)
        assert nv.parse_novikov(nv.format_novikov(x)) == x
