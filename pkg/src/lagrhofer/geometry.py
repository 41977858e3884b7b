"""Embeddings of the bidisk into S^2 x S^2, the tori T_tau and the moment map.

Conventions
-----------
The sphere is the unit sphere in R^3 with e1 = (1, 0, 0).  The projective
formula [sqrt(1 - delta|z|^2) : sqrt(delta) z] is composed with stereographic
projection from e1 onto the plane v1 = 0, identified with C by
zeta = v2 + i v3.  Writing rho = |z|^2 this gives

    v1           = 2 delta rho - 1
    v2 + i v3    = 2 sqrt(delta) z sqrt(1 - delta rho)

so the image is {v1 < 2 delta - 1}, the circle rho = 1/(2 delta) lands on
{v1 = 0} and real z land on {v3 = 0}.

Most functions accept numpy arrays (points stacked along the first axis);
``DiskPoint`` and ``SpherePoint`` are thin validated wrappers for single
points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

# (2 + sqrt 3)/4: below this no torus T_tau fits inside the image.
DELTA_STAR = (2.0 + math.sqrt(3.0)) / 4.0
UNIT_TOL = 1e-12
ANTI_DIAGONAL_TOL = 1e-9
DEFAULT_GRID = (720, 720)


def _check_delta(delta):
    if not 0.5 < delta <= 1.0:
        raise ValueError("delta must lie in (1/2, 1], got %r" % delta)


def _check_tau(tau, upper=0.5):
    if not 0.0 < tau <= upper:
        raise ValueError("tau must lie in (0, %s], got %r" % (upper, tau))


@dataclass(frozen=True)
class DiskPoint:
    z: complex

    def __post_init__(self):
        z = complex(self.z)
        if not abs(z) < 1.0:
            raise ValueError("|z| = %r is not < 1" % abs(z))
        object.__setattr__(self, "z", z)


@dataclass(frozen=True)
class SpherePoint:
    v: tuple

    def __post_init__(self):
        v = tuple(float(c) for c in self.v)
        if len(v) != 3:
            raise ValueError("sphere point needs 3 coordinates")
        if abs(v[0] ** 2 + v[1] ** 2 + v[2] ** 2 - 1.0) > UNIT_TOL:
            raise ValueError("not a unit vector: %r" % (v,))
        object.__setattr__(self, "v", v)

    def array(self) -> np.ndarray:
        return np.array(self.v)


@dataclass(frozen=True)
class TorusParams:
    tau: float
    delta: float

    def __post_init__(self):
        _check_tau(self.tau)
        _check_delta(self.delta)


# -- the embedding -------------------------------------------------------


def theta_delta_array(z, delta) -> np.ndarray:
    """Vectorised embedding: complex array of shape S -> real array S + (3,)."""
    _check_delta(delta)
    z = np.asarray(z, dtype=complex)
    rho = z.real ** 2 + z.imag ** 2
    if np.any(rho >= 1.0):
        raise ValueError("points outside the open unit disk")
    zeta = 2.0 * math.sqrt(delta) * z * np.sqrt(1.0 - delta * rho)
    return np.stack([2.0 * delta * rho - 1.0, zeta.real, zeta.imag], axis=-1)


def theta_delta(z, delta) -> SpherePoint:
    if not isinstance(z, DiskPoint):
        z = DiskPoint(z)
    return SpherePoint(theta_delta_array(z.z, delta))


def theta_delta_inverse_array(v, delta) -> np.ndarray:
    """Inverse on the image {v1 < 2 delta - 1}; returns complex array."""
    _check_delta(delta)
    v = np.asarray(v, dtype=float)
    if np.any(v[..., 0] >= 2.0 * delta - 1.0):
        raise ValueError("outside embedding image: v1 >= 2 delta - 1 = %r" % (2 * delta - 1))
    # |z|^2 = (1 + v1)/(2 delta), so 1 - delta |z|^2 = (1 - v1)/2
    denom = 2.0 * math.sqrt(delta) * np.sqrt((1.0 - v[..., 0]) / 2.0)
    return (v[..., 1] + 1j * v[..., 2]) / denom


def theta_delta_inverse(v, delta) -> DiskPoint:
    if not isinstance(v, SpherePoint):
        v = SpherePoint(v)
    return DiskPoint(complex(theta_delta_inverse_array(v.array(), delta)))


def image_contains(v, delta):
    """v1 < 2 delta - 1, elementwise for stacked points."""
    if isinstance(v, SpherePoint):
        v = v.array()
    v = np.asarray(v, dtype=float)
    out = v[..., 0] < 2.0 * delta - 1.0
    return bool(out) if out.ndim == 0 else out


# -- the tori T_tau --------------------------------------------------------


def sample_torus_arrays(tau, grid=DEFAULT_GRID):
    """Stacked samples (V, W), each of shape (n_phi * n_psi, 3), of T_tau.

    s = v + w = 2 tau (cos phi e2 + sin phi e3) and v - w = 2p with
    p = sqrt(1 - tau^2)(cos psi e1 + sin psi n), n = (0, -sin phi, cos phi).
    """
    _check_tau(tau)
    n_phi, n_psi = grid
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    psi = 2.0 * np.pi * np.arange(n_psi) / n_psi
    P, S = np.meshgrid(phi, psi, indexing="ij")
    P, S = P.ravel(), S.ravel()
    r = math.sqrt(1.0 - tau * tau)
    half_s = np.stack([np.zeros_like(P), tau * np.cos(P), tau * np.sin(P)], axis=-1)
    p = r * np.stack([np.cos(S), -np.sin(S) * np.sin(P), np.sin(S) * np.cos(P)], axis=-1)
    return half_s + p, half_s - p


def sample_torus(tau, grid=DEFAULT_GRID) -> list:
    """List of (SpherePoint, SpherePoint) pairs; use the array form for big grids."""
    V, W = sample_torus_arrays(tau, grid)
    return [(SpherePoint(v), SpherePoint(w)) for v, w in zip(V, W)]


def moment_map_array(V, W, strict=True) -> np.ndarray:
    """(|v+w|/2 + (v+w)_1/2, 1 - |v+w|/2) for stacked pairs.

    With ``strict`` the anti-diagonal raises; otherwise it maps to the
    vertex (0, 1), the continuous extension.
    """
    S = np.asarray(V, dtype=float) + np.asarray(W, dtype=float)
    n = np.linalg.norm(S, axis=-1)
    if strict and np.any(n < ANTI_DIAGONAL_TOL):
        raise ValueError("anti-diagonal: moment map continuous but chart excluded")
    return np.stack([0.5 * n + 0.5 * S[..., 0], 1.0 - 0.5 * n], axis=-1)


def moment_map(v, w) -> tuple:
    if isinstance(v, SpherePoint):
        v = v.array()
    if isinstance(w, SpherePoint):
        w = w.array()
    u = moment_map_array(v, w)
    return float(u[0]), float(u[1])


def in_polytope(u, tol=1e-9):
    """Membership in {0 <= u1 <= 2, 0 <= u2 <= 1 - u1/2}."""
    u = np.asarray(u, dtype=float)
    u1, u2 = u[..., 0], u[..., 1]
    return (u1 >= -tol) & (u1 <= 2 + tol) & (u2 >= -tol) & (u2 <= 1 - u1 / 2 + tol)


def torus_projection_extent(tau) -> float:
    """max |v . e1| over T_tau, i.e. sqrt(1 - tau^2).

    Accepts tau up to 1 so the degenerate limit can be inspected.
    """
    _check_tau(tau, upper=1.0)
    return math.sqrt(1.0 - tau * tau)


def min_delta_for_containment(tau) -> float:
    """Infimum of delta with T_tau inside the image of the product embedding."""
    return (1.0 + torus_projection_extent(tau)) / 2.0


def torus_in_image(tau, delta, grid=DEFAULT_GRID) -> bool:
    V, W = sample_torus_arrays(tau, grid)
    return bool(np.all(image_contains(V, delta)) and np.all(image_contains(W, delta)))


def epsilon_delta(delta) -> float:
    """Half-width of the interval (1/2 - eps, 1/2] of tori inside the image.

    The bound is open; callers shrink it by a safety factor.
    """
    _check_delta(delta)
    if delta < DELTA_STAR and not math.isclose(delta, DELTA_STAR, rel_tol=1e-14):
        raise ValueError("no containment interval: delta %r <= (2+sqrt3)/4" % delta)
    c = 2.0 * delta - 1.0
    return max(0.0, 0.5 - math.sqrt(max(0.0, 1.0 - c * c)))


# -- fibres over a disk in the polytope -------------------------------------


def fibre_max_v1(u) -> np.ndarray:
    """Largest first coordinate of v over the moment fibre above u.

    On the fibre, m = (v+w)/2 has |m| = 1 - u2 =: s and m1 = u1 - s, and
    v = m + p with p orthogonal to m and |p|^2 = 1 - s^2.
    """
    u = np.asarray(u, dtype=float)
    s = 1.0 - u[..., 1]
    m1 = u[..., 0] - s
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.clip(1.0 - (m1 / s) ** 2, 0.0, None)
    return m1 + np.sqrt(np.clip(1.0 - s * s, 0.0, None)) * np.sqrt(t)


def _disk_fibre_max(eps, n_r=64, n_a=720):
    u0 = np.array([0.5, 0.5])
    r = math.sqrt(2.0) * eps * np.linspace(0.0, 1.0, n_r)
    a = 2.0 * np.pi * np.arange(n_a) / n_a
    R, A = np.meshgrid(r, a, indexing="ij")
    u = np.stack([u0[0] + R * np.cos(A), u0[1] + R * np.sin(A)], axis=-1).reshape(-1, 2)
    u = u[in_polytope(u, tol=0.0)]
    return float(np.max(fibre_max_v1(u)))


@lru_cache(maxsize=64)
def epsilon_disk(delta, iters=60) -> float:
    """Largest eps with every fibre over the disk B(u0, sqrt2 eps) inside the image."""
    _check_delta(delta)
    bound = 2.0 * delta - 1.0
    lo, hi = 0.0, 0.5
    if _disk_fibre_max(hi) < bound:
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if _disk_fibre_max(mid) < bound:
            lo = mid
        else:
            hi = mid
    return lo


def phi_epsilon(delta, safety=0.99) -> float:
    """Window half-width used to place functions on the torus family.

    Both the tori over J and the whole preimage of the disk around u0 must
    sit inside the image, so this is safety * min(epsilon_delta, epsilon_disk).
    """
    if not 0.0 < safety < 1.0:
        raise ValueError("safety factor must lie in (0, 1)")
    return safety * min(epsilon_delta(delta), epsilon_disk(delta))


# -- area --------------------------------------------------------------------


@lru_cache(maxsize=8)
def _gauss_legendre(n):
    return roots_legendre(n)


def conformal_area_check(delta, r, quadrature_n=2048, n_angle=32) -> float:
    """Area of theta_delta(B^2(r)) under half the round form, over 2 pi r^2.

    Gauss-Legendre in the radius, trapezoid in the angle; the Jacobian is
    the analytic cross product of the two coordinate derivatives.
    """
    _check_delta(delta)
    if not 0.0 < r <= 1.0:
        raise ValueError("r must lie in (0, 1]")
    x, wts = _gauss_legendre(quadrature_n)
    rho = 0.5 * r * (x + 1.0)
    wts = 0.5 * r * wts
    alpha = 2.0 * np.pi * np.arange(n_angle) / n_angle
    Rh, Al = np.meshgrid(rho, alpha, indexing="ij")
    sd = math.sqrt(delta)
    q = np.sqrt(1.0 - delta * Rh ** 2)
    amp = 2.0 * sd * Rh * q
    d_amp = 2.0 * sd * (1.0 - 2.0 * delta * Rh ** 2) / q
    c, s = np.cos(Al), np.sin(Al)
    d_rho = np.stack([4.0 * delta * Rh, d_amp * c, d_amp * s], axis=-1)
    d_alpha = np.stack([np.zeros_like(Rh), -amp * s, amp * c], axis=-1)
    jac = np.linalg.norm(np.cross(d_rho, d_alpha), axis=-1)
    area = 0.5 * np.sum(wts[:, None] * jac) * (2.0 * np.pi / n_angle)
    return float(area / (2.0 * np.pi * r * r))
