"""Evaluation calculus for the quasi-morphisms mu_delta^tau and Hofer bounds.

mu is never computed from Floer data.  It is defined operationally: if a
Hamiltonian F on the bidisk, pulled to S^2 x S^2 through the embedding, is
constant equal to c on a superheavy set X, then mu(phi_F) = c.  Together with
the defect from the toric computation and the Lipschitz constant 1 + delta^2
this produces two-sided Hofer-distance certificates.

Hamiltonians on the bidisk are vectorised callables ``evaluate(t, z1, z2)``
taking numpy arrays of complex numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import roots_legendre

from . import geometry as geo

CONSTANCY_TOL = 1e-8
SAFETY = 0.99
# sup over tau of the defect; the toric pipeline gives 12 for every tau tested
DEFECT_SUP = 12
DEFECT_VALUATION = -1
EDGE_FRACTION = 0.05


def lipschitz_constant(delta) -> float:
    geo._check_delta(delta)
    return 1.0 + delta * delta


def ambient_volume() -> float:
    """Integral of the square of the product form: 2 * (2 pi) * (2 pi)."""
    return 8.0 * math.pi ** 2


# -- Hamiltonians -------------------------------------------------------------


@dataclass(frozen=True)
class HamiltonianField:
    evaluate: Callable
    support_bound: tuple = (1.0, 1.0)
    autonomous: bool = True
    name: str = "H"

    def __call__(self, t, z1, z2):
        return np.asarray(self.evaluate(t, z1, z2), dtype=float)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            c = float(other)
            return HamiltonianField(
                lambda t, z1, z2: self(t, z1, z2) + c,
                (1.0, 1.0), self.autonomous, "%s + %g" % (self.name, c),
            )
        return _combine(self, other, 1.0)

    def __sub__(self, other):
        return _combine(self, other, -1.0)

    def __neg__(self):
        return HamiltonianField(lambda t, z1, z2: -self(t, z1, z2),
                                self.support_bound, self.autonomous, "-" + self.name)

    def support_violation(self, n=4000, seed=0, t=0.0) -> float:
        """Largest |H| at random bidisk points outside the declared support."""
        rng = np.random.default_rng(seed)
        r1, r2 = self.support_bound
        z1 = _random_annulus(rng, r1, n)
        z2 = _random_disk(rng, 1.0, n)
        a = np.max(np.abs(self(t, z1, z2))) if r1 < 1 else 0.0
        z1 = _random_disk(rng, 1.0, n)
        z2 = _random_annulus(rng, r2, n)
        b = np.max(np.abs(self(t, z1, z2))) if r2 < 1 else 0.0
        return float(max(a, b))


def _combine(a, b, sign):
    return HamiltonianField(
        lambda t, z1, z2: a(t, z1, z2) + sign * b(t, z1, z2),
        (max(a.support_bound[0], b.support_bound[0]), max(a.support_bound[1], b.support_bound[1])),
        a.autonomous and b.autonomous,
        "%s %s %s" % (a.name, "+" if sign > 0 else "-", b.name),
    )


def _random_disk(rng, r, n):
    rho = r * np.sqrt(rng.random(n)) * (1 - 1e-12)
    return rho * np.exp(2j * np.pi * rng.random(n))


def _random_annulus(rng, r, n):
    rho = np.sqrt(r * r + (1 - r * r) * rng.random(n)) * (1 - 1e-12)
    return rho * np.exp(2j * np.pi * rng.random(n))


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
    b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def plateau(rho, center, flat, ramp):
    """1 on |rho - center| <= flat, 0 beyond flat + ramp, smooth between."""
    d = np.abs(np.asarray(rho, dtype=float) - center)
    return smooth_step((flat + ramp - d) / ramp)


def equator_hamiltonian(h, delta) -> HamiltonianField:
    """H = h on the torus |z1|^2 = |z2|^2 = 1/(2 delta), compactly supported."""
    geo._check_delta(delta)
    rho0 = 1.0 / math.sqrt(2.0 * delta)
    gap = 1.0 - rho0
    flat, ramp = gap / 4, gap / 4
    h = float(h)

    def H(t, z1, z2):
        return h * plateau(np.abs(z1), rho0, flat, ramp) * plateau(np.abs(z2), rho0, flat, ramp)

    r = rho0 + flat + ramp
    return HamiltonianField(H, (r, r), True, "equator plateau h=%g" % h)


@dataclass(frozen=True)
class SphereHamiltonian:
    """A Hamiltonian on S^2 x S^2: ``evaluate(t, V, W)`` with (N, 3) arrays."""

    evaluate: Callable
    autonomous: bool = True

    def __call__(self, t, V, W):
        return np.asarray(self.evaluate(t, V, W), dtype=float)


@lru_cache(maxsize=4)
def _sphere_nodes(n):
    # cos(theta) Gauss-Legendre, longitude trapezoid; weights for half the round area
    x, w = roots_legendre(n)
    lon = 2 * np.pi * np.arange(2 * n) / (2 * n)
    X, L = np.meshgrid(x, lon, indexing="ij")
    s = np.sqrt(1 - X ** 2)
    pts = np.stack([X.ravel(), (s * np.cos(L)).ravel(), (s * np.sin(L)).ravel()], axis=-1)
    wts = np.repeat(w, 2 * n) * (np.pi / n) * 0.5
    return pts, wts


def sphere_integral(H, t=0.0, quadrature=16) -> float:
    """Integral of H(t, .) against the square of the product form."""
    pts, wts = _sphere_nodes(quadrature)
    m = len(pts)
    V = np.repeat(pts, m, axis=0)
    W = np.tile(pts, (m, 1))
    vals = H(t, V, W).reshape(m, m)
    return float(2.0 * wts @ vals @ wts)


def normalize_hamiltonian(H, quadrature=16) -> SphereHamiltonian:
    """Subtract the mean so the result integrates to zero."""
    vol = ambient_volume()
    cache = {}

    def mean(t):
        if t not in cache:
            cache[t] = sphere_integral(H, t, quadrature) / vol
        return cache[t]

    return SphereHamiltonian(lambda t, V, W: H(t, V, W) - mean(float(t)),
                             getattr(H, "autonomous", True))


def calabi_integral(F: HamiltonianField, delta, quadrature=32, n_angle=32, n_time=8) -> float:
    """delta^3 * int dt int F (omega_0 + omega_0)^2 over the bidisk.

    omega_0 = 2 dx dy so each disk of radius r has area 2 pi r^2; the square
    of the product form contributes the factor 2.
    """
    geo._check_delta(delta)
    x, w = roots_legendre(quadrature)
    a = 2 * np.pi * np.arange(n_angle) / n_angle
    da = 2 * np.pi / n_angle

    def disk(r):
        rho = 0.5 * r * (x + 1)
        wr = 0.5 * r * w * rho * 2.0 * da  # rho d rho d alpha, times 2 for omega_0
        Z = (rho[:, None] * np.exp(1j * a)[None, :]).ravel()
        return Z, np.repeat(wr, n_angle)

    Z1, W1 = disk(F.support_bound[0])
    Z2, W2 = disk(F.support_bound[1])
    A = np.repeat(Z1, len(Z2))
    B = np.tile(Z2, len(Z1))
    if F.autonomous:
        ts, wt = [0.0], [1.0]
    else:
        tx, tw = roots_legendre(n_time)
        ts, wt = 0.5 * (tx + 1), 0.5 * tw
    total = 0.0
    for t, c in zip(ts, wt):
        vals = F(t, A, B).reshape(len(Z1), len(Z2))
        total += c * float(W1 @ vals @ W2)
    return delta ** 3 * 2.0 * total


# -- superheavy sets ------------------------------------------------------------


@dataclass(frozen=True)
class SuperheavySet:
    """A registered superheavy set in S^2 x S^2.

    kind "TorusT" is T_tau (valid for mu^tau with the same tau only);
    kind "EquatorTorus" is {v_a = 0} x {w_b = 0} for coordinate axes a, b
    in {1, 2, 3}.  The result is stated for the {v3 = 0} circles; the
    others are rotations of it, and mu is invariant under symplectomorphisms,
    so every axis pair is registered for every tau.
    """

    kind: str
    tau: Optional[float] = None
    axes: tuple = (1, 1)

    def __post_init__(self):
        if self.kind == "TorusT":
            geo._check_tau(self.tau)
        elif self.kind == "EquatorTorus":
            if len(self.axes) != 2 or any(a not in (1, 2, 3) for a in self.axes):
                raise ValueError("equator axes must be two of 1, 2, 3")
        else:
            raise ValueError("unknown superheavy set kind %r" % self.kind)

    @classmethod
    def torus(cls, tau):
        return cls("TorusT", tau=float(tau))

    @classmethod
    def equator(cls, a=1, b=1):
        return cls("EquatorTorus", axes=(a, b))

    def superheavy_for(self, tau) -> bool:
        if self.kind == "EquatorTorus":
            return True
        return math.isclose(self.tau, tau, rel_tol=0, abs_tol=1e-15)

    def sample(self, grid=(360, 360)):
        if self.kind == "TorusT":
            return geo.sample_torus_arrays(self.tau, grid)
        n1, n2 = grid
        A, B = np.meshgrid(2 * np.pi * np.arange(n1) / n1, 2 * np.pi * np.arange(n2) / n2,
                           indexing="ij")
        return _circle(self.axes[0], A.ravel()), _circle(self.axes[1], B.ravel())

    def residual(self, V, W) -> float:
        """Largest violation of the defining equations on the given samples."""
        unit = max(np.max(np.abs(np.sum(V * V, -1) - 1)), np.max(np.abs(np.sum(W * W, -1) - 1)))
        if self.kind == "EquatorTorus":
            eq = max(np.max(np.abs(V[:, self.axes[0] - 1])), np.max(np.abs(W[:, self.axes[1] - 1])))
        else:
            u = geo.moment_map_array(V, W)
            eq = np.max(np.abs(u - np.array([self.tau, 1 - self.tau])))
        return float(max(unit, eq))

    def label(self):
        if self.kind == "TorusT":
            return "T_tau(tau=%g)" % self.tau
        return "S1_{v%d=0} x S1_{w%d=0}" % self.axes


def _circle(axis, angle):
    others = [i for i in range(3) if i != axis - 1]
    out = np.zeros((len(angle), 3))
    out[:, others[0]] = np.cos(angle)
    out[:, others[1]] = np.sin(angle)
    return out


@dataclass
class MuEvaluation:
    value: Optional[float]
    constancy_residual: float
    set: SuperheavySet
    delta: float
    tau: float
    status: str = "ok"
    sample_min: float = 0.0
    sample_max: float = 0.0

    @property
    def conclusive(self):
        return self.status == "ok"


def _pullback_samples(H, X, delta, grid, n_time):
    V, W = X.sample(grid)
    if not (np.all(geo.image_contains(V, delta)) and np.all(geo.image_contains(W, delta))):
        raise ValueError("superheavy set not in image: %s escapes v1 < %g" % (X.label(), 2 * delta - 1))
    z1 = geo.theta_delta_inverse_array(V, delta)
    z2 = geo.theta_delta_inverse_array(W, delta)
    ts = [0.0] if H.autonomous else np.linspace(0.0, 1.0, n_time)
    return np.concatenate([H(t, z1, z2).ravel() for t in ts])


def evaluate_mu(H: HamiltonianField, X: SuperheavySet, delta, tau, grid=(360, 360),
                tol=CONSTANCY_TOL, n_time=5) -> MuEvaluation:
    """mu_delta^tau(phi_H) by the constancy rule on a superheavy set.

    Non-constant pullbacks give status "inconclusive" and no value.
    """
    if not X.superheavy_for(tau):
        raise ValueError("%s is not registered as superheavy for tau=%r" % (X.label(), tau))
    vals = _pullback_samples(H, X, delta, grid, n_time)
    lo, hi = float(np.min(vals)), float(np.max(vals))
    res = hi - lo
    if res > tol:
        return MuEvaluation(None, res, X, delta, tau, "inconclusive", lo, hi)
    # the mean of nearly equal floats can leave [lo, hi] by an ulp
    value = lo if res == 0 else min(max(float(np.mean(vals)), lo), hi)
    return MuEvaluation(value, res, X, delta, tau, "ok", lo, hi)


def superheavy_sandwich_check(H, X, value, delta, grid=(360, 360), n_time=5) -> bool:
    """min_X H <= value <= max_X H on the sampled set."""
    if value is None:
        return False
    vals = _pullback_samples(H, X, delta, grid, n_time)
    return bool(np.min(vals) <= value <= np.max(vals))


# -- functions on (0, 1) --------------------------------------------------------


@dataclass
class FunctionSample:
    """Values on the uniform grid linspace(0, 1, N), vanishing near both ends.

    ``func`` (optional) is a smooth vectorised callable agreeing with the
    values; without it a cubic spline through the grid is used.
    """

    values: np.ndarray
    func: Optional[Callable] = None
    tol: float = 1e-12

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = len(self.values)
        if n < 20:
            raise ValueError("need at least 20 grid points")
        k = max(1, int(math.ceil(EDGE_FRACTION * n)))
        if np.any(np.abs(self.values[:k]) > self.tol) or np.any(np.abs(self.values[-k:]) > self.tol):
            raise ValueError("function must vanish on the first and last 5%% of the grid")
        self._spline = None

    @property
    def grid(self):
        return np.linspace(0.0, 1.0, len(self.values))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0) & (x < 1)
        if self.func is not None:
            return np.where(inside, self.func(np.clip(x, 0, 1)), 0.0)
        if self._spline is None:
            self._spline = CubicSpline(self.grid, self.values)
        return np.where(inside, self._spline(np.clip(x, 0, 1)), 0.0)

    def __sub__(self, other):
        if len(other.values) != len(self.values):
            raise ValueError("grids differ")
        func = None
        if self.func is not None and other.func is not None:
            f, g = self.func, other.func
            func = lambda x: f(x) - g(x)  # noqa: E731
        return FunctionSample(self.values - other.values, func, max(self.tol, other.tol))

    @classmethod
    def from_callable(cls, func, n=1001):
        return cls(func(np.linspace(0.0, 1.0, n)), func)

    @classmethod
    def zero(cls, n=1001):
        return cls.from_callable(lambda x: np.zeros_like(np.asarray(x, dtype=float)), n)

    @classmethod
    def bump(cls, center, width, height, n=1001):
        """height * exp(1 - 1/(1 - s^2)), s = (x - center)/width, on |s| < 1."""
        if center - width < EDGE_FRACTION or center + width > 1 - EDGE_FRACTION:
            raise ValueError("bump support leaves (0.05, 0.95)")

        def f(x):
            s = (np.asarray(x, dtype=float) - center) / width
            inside = np.abs(s) < 1
            safe = np.where(inside, 1 - s * s, 1.0)
            return np.where(inside, height * np.exp(1 - 1 / safe), 0.0)

        return cls.from_callable(f, n)

    def to_dict(self):
        return {"grid_size": len(self.values), "values": [float(v) for v in self.values]}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["values"], dtype=float))


def hofer_norm_upper(f_minus_g: FunctionSample) -> float:
    v = f_minus_g.values
    return float(np.max(v) - np.min(v))


def sup_norm_and_argmax(f: FunctionSample, g: FunctionSample):
    """(max |f - g|, grid point of the first maximiser)."""
    if len(f.values) != len(g.values):
        raise ValueError("grids differ")
    d = np.abs(f.values - g.values)
    i = int(np.argmax(d))
    return float(d[i]), float(f.grid[i])


# -- placing functions on the torus family --------------------------------------


def interval_to_tau(x, eps):
    """The affine identification (0, 1) -> (1/2 - eps, 1/2)."""
    return 0.5 - eps + eps * np.asarray(x, dtype=float)


def tau_to_interval(tau, eps):
    return (np.asarray(tau, dtype=float) - 0.5 + eps) / eps


def build_f_B2(f: FunctionSample, delta, safety=SAFETY, epsilon=None):
    """Radial function about u0 = (1/2, 1/2) on the polytope.

    The point (tau, 1 - tau) sits at |u - u0|/sqrt2 = 1/2 - tau and receives
    f at the interval coordinate of tau, so the value at radius r is
    f(1 - r/eps).
    """
    eps_max = geo.phi_epsilon(delta, safety)
    eps = eps_max if epsilon is None else float(epsilon)
    if eps > eps_max or eps <= 0:
        raise ValueError("support exceeds containment interval: eps %r > %r" % (eps, eps_max))

    def fB2(u):
        u = np.asarray(u, dtype=float)
        r = np.hypot(u[..., 0] - 0.5, u[..., 1] - 0.5) / math.sqrt(2.0)
        return f(1.0 - r / eps)

    fB2.epsilon = eps
    return fB2


def build_tilde_f(f: FunctionSample, delta, safety=SAFETY, epsilon=None) -> HamiltonianField:
    """f_B2 composed with the moment map and the product embedding."""
    fB2 = build_f_B2(f, delta, safety, epsilon)
    eps = fB2.epsilon

    def H(t, z1, z2):
        V = geo.theta_delta_array(z1, delta)
        W = geo.theta_delta_array(z2, delta)
        return fB2(geo.moment_map_array(V, W, strict=False))

    # support: v1 is at most the largest fibre value over the disk
    vmax = geo._disk_fibre_max(eps)
    r = min(1.0, math.sqrt((1.0 + vmax) / (2.0 * delta)) + 1e-9)
    field_ = HamiltonianField(H, (r, r), True, "tilde f")
    object.__setattr__(field_, "epsilon", eps)
    return field_


def _grad(F, z1, z2, h):
    """Central differences of F in (x1, y1, x2, y2)."""
    out = []
    for k, dz in ((0, h), (0, 1j * h), (1, h), (1, 1j * h)):
        if k == 0:
            d = (F(0.0, z1 + dz, z2) - F(0.0, z1 - dz, z2)) / (2 * h)
        else:
            d = (F(0.0, z1, z2 + dz) - F(0.0, z1, z2 - dz)) / (2 * h)
        out.append(d)
    return out


def poisson_bracket(F, G, z1, z2, h):
    """{F, G} for the form 2dx1dy1 + 2dx2dy2, by central differences."""
    fx1, fy1, fx2, fy2 = _grad(F, z1, z2, h)
    gx1, gy1, gx2, gy2 = _grad(G, z1, z2, h)
    return 0.5 * (fx1 * gy1 - fy1 * gx1 + fx2 * gy2 - fy2 * gx2)


def poisson_residual(F, G, z1, z2, h) -> float:
    return float(np.max(np.abs(poisson_bracket(F, G, z1, z2, h))))


def poisson_convergence(F, G, z1, z2, h):
    """(residual at h, residual at h/2, ratio)."""
    a = poisson_residual(F, G, z1, z2, h)
    b = poisson_residual(F, G, z1, z2, h / 2)
    return a, b, (a / b if b > 0 else math.inf)


def torus_preimage(tau, delta, grid=(360, 360)):
    V, W = geo.sample_torus_arrays(tau, grid)
    return geo.theta_delta_inverse_array(V, delta), geo.theta_delta_inverse_array(W, delta)


# -- certificates -----------------------------------------------------------------


@dataclass
class BoundCertificate:
    delta: float
    tau: float
    mu_value: float
    lipschitz: float
    defect_bound: float
    volume: float
    lower_bound: float
    upper_bound: Optional[float] = None
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.upper_bound is not None and self.lower_bound > self.upper_bound:
            raise ValueError("certificate inconsistent: lower %r > upper %r"
                             % (self.lower_bound, self.upper_bound))

    @property
    def display_lower(self):
        return max(self.lower_bound, 0.0)

    def to_dict(self):
        return {
            "delta": self.delta,
            "tau": self.tau,
            "mu_value": self.mu_value,
            "lipschitz": self.lipschitz,
            "defect_bound": self.defect_bound,
            "volume": self.volume,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "inputs": self.inputs,
        }


def diameter_lower_bound(mu_value, delta, defect) -> float:
    """(|mu| - defect/(delta vol)) / (1 + delta^2); may be negative (vacuous)."""
    if defect < 0:
        raise ValueError("defect must be non-negative")
    return (abs(mu_value) - defect / (delta * ambient_volume())) / lipschitz_constant(delta)


def infinite_diameter_certificate(h, delta, tau=0.25, defect=DEFECT_SUP,
                                  valuation=DEFECT_VALUATION, grid=(180, 180)) -> BoundCertificate:
    """Lower bound on d(L_delta, phi_H(L_delta)) for the equator plateau H = h."""
    H = equator_hamiltonian(h, delta)
    X = SuperheavySet.equator(1, 1)
    ev = evaluate_mu(H, X, delta, tau, grid)
    if not ev.conclusive:
        raise RuntimeError("equator evaluation inconclusive (residual %g)" % ev.constancy_residual)
    if not superheavy_sandwich_check(H, X, ev.value, delta, grid):
        raise RuntimeError("sandwich check failed")
    lower = diameter_lower_bound(ev.value, delta, defect)
    return BoundCertificate(
        float(delta), float(tau), ev.value, lipschitz_constant(delta), float(defect),
        ambient_volume(), lower, None,
        {"hamiltonian": H.name, "h": float(h), "set": X.label(),
         "constancy_residual": ev.constancy_residual, "defect_valuation": str(valuation)},
    )


def diameter_table(delta, h_values, tau=0.25, defect=DEFECT_SUP, valuation=DEFECT_VALUATION):
    return [infinite_diameter_certificate(h, delta, tau, defect, valuation) for h in h_values]


def phi_bound_certificate(f: FunctionSample, g: FunctionSample, delta, safety=SAFETY,
                          defect=DEFECT_SUP, valuation=DEFECT_VALUATION,
                          grid=(120, 120), consistency_tol=1e-6) -> BoundCertificate:
    """Two-sided bound on d(Phi(f), Phi(g)) from the torus family.

    lower = (||f - g||_inf - defect/(delta vol)) / (1 + delta^2),
    upper = max(f - g) - min(f - g).
    """
    if not geo.DELTA_STAR < delta <= 1.0:
        raise ValueError("delta must lie in ((2+sqrt3)/4, 1] for the torus family to fit in the image")
    ft = build_tilde_f(f, delta, safety)
    gt = build_tilde_f(g, delta, safety)
    eps = ft.epsilon
    sup, x_star = sup_norm_and_argmax(f, g)
    tau_star = float(interval_to_tau(x_star, eps))
    diff = ft - gt
    ev = evaluate_mu(diff, SuperheavySet.torus(tau_star), delta, tau_star, grid)
    if not ev.conclusive:
        raise RuntimeError("torus evaluation inconclusive (residual %g)" % ev.constancy_residual)
    mismatch = abs(abs(ev.value) - sup)
    if mismatch > consistency_tol:
        raise RuntimeError("mu at tau' (%r) disagrees with the sup norm (%r)" % (ev.value, sup))
    lower = diameter_lower_bound(sup, delta, defect)
    upper = hofer_norm_upper(f - g)
    return BoundCertificate(
        float(delta), tau_star, ev.value, lipschitz_constant(delta), float(defect),
        ambient_volume(), lower, upper,
        {"sup_norm": sup, "argmax_x": x_star, "epsilon": eps, "mu_sup_mismatch": mismatch,
         "constancy_residual": ev.constancy_residual, "defect_valuation": str(valuation),
         "grid_size": len(f.values)},
    )


# name kept for callers that expect it
theorem12_certificate = phi_bound_certificate


def certified_defect(tau: Fraction, cutoff=3):
    """(defect, valuation) from the exact toric pipeline at a rational tau."""
    from .toric import run_defect_pipeline

    run = run_defect_pipeline(Fraction(tau), cutoff=cutoff)
    return run.defect, min(run.valuations)
