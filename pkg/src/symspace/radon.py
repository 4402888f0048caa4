"""Radon and dual Radon transforms.

On the models, functions are integrated over totally geodesic submanifolds
with the invariant measure obtained from the reduced symplectic area, and
the dual transform averages over the submanifolds through a point with the
stabilizer-invariant probability measure.  The classical plane transform on
R^3 with its Laplacian inversion formula is the quantitative anchor.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, DivergenceError, SamplerError
from .geodesic_sub import (
    GeodesicSubmanifold,
    OrbitInvariants,
    act_on_submanifold,
    induced_embedding,
    membership_residual,
    random_submanifold,
    reference_submanifold,
)
from .group import (
    GroupElement,
    _complete_pseudo_unitary,
    act,
    complex_to_real_matrix,
    haar_group_element,
    haar_unitary,
)
from .model import ModelPoint, ModelSpace, canonical_rep


# densities --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DensityFunction:
    """A function on a model space, with an optional vectorized evaluator.

    vector_evaluator takes representatives as columns, shape (2n+2, N), and
    must be constant along orbits.
    """

    evaluator: Callable[[ModelPoint], float]
    support_radius: float = np.inf
    vector_evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None


def _hermitian_t(space: ModelSpace, reps: np.ndarray, z0: np.ndarray) -> np.ndarray:
    """Orbit invariant k^2 |<z, z0>|^2 for elliptic spaces; 1 at the center."""
    s = space._signs()
    k = space.klass.k
    n1 = space.n + 1
    z = reps[:n1, :] + 1j * (s[:, None] * reps[n1:, :])
    pairing = np.einsum("a,aN->N", s * np.conj(z0), z)
    return (k ** 2) * np.abs(pairing) ** 2


def registry_density(space: ModelSpace, name: str, center: Optional[ModelPoint] = None) -> DensityFunction:
    """Named test densities on a model space.

    Elliptic spaces use the Hermitian alignment t with the center; other
    cases build the profile on the moment-map displacement, which is orbit
    invariant in every case.
    """
    if center is None:
        center = space.reference_point()

    if space.case == "elliptic":
        z0 = space.to_complex(center.rep)

        def alignment(reps: np.ndarray) -> np.ndarray:
            return _hermitian_t(space, reps, z0)

    else:
        from .group import algebra_basis, moment, AlgebraElement

        basis = algebra_basis(space)
        om_a = np.array([space.omega.matrix @ b for b in basis])

        def moment_vector(reps: np.ndarray) -> np.ndarray:
            return 0.5 * np.einsum("dN,bde,eN->bN", reps, om_a, reps)

        m0 = moment_vector(center.rep[:, None])[:, 0]

        def alignment(reps: np.ndarray) -> np.ndarray:
            diff = moment_vector(reps) - m0[:, None]
            return 1.0 / (1.0 + np.einsum("bN,bN->N", diff, diff))

    profiles = {
        "gaussian": (lambda t: np.exp(-3.0 * (1.0 - t)), np.inf),
        "bump": (_bump_profile, 1.0),
        "zonal-harmonic": (lambda t: 3.0 * t ** 2 - 2.0 * t, np.inf),
    }
    if name not in profiles:
        raise DimensionError(f"unknown registry density {name!r}")
    profile, radius = profiles[name]

    def vector_evaluator(reps: np.ndarray) -> np.ndarray:
        return profile(alignment(reps))

    return DensityFunction(
        evaluator=lambda p: float(vector_evaluator(p.rep[:, None])[0]),
        support_radius=radius,
        vector_evaluator=vector_evaluator,
    )


def _bump_profile(t: np.ndarray) -> np.ndarray:
    s = 2.0 * (1.0 - np.asarray(t, dtype=float))
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


# quadrature on submanifolds ----------------------------------------------


@dataclass(frozen=True, eq=False)
class SubmanifoldQuadrature:
    """Nodes (as representative columns) and weights for integrals over S."""

    scheme: str
    resolution: int
    space: ModelSpace
    reps: np.ndarray  # shape (2n+2, N)
    weights: np.ndarray

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def points(self) -> list[ModelPoint]:
        return [ModelPoint(self.space, self.reps[:, i]) for i in range(self.reps.shape[1])]


def is_compact_submanifold(s: GeodesicSubmanifold) -> bool:
    """Only the definite elliptic orbits are compact."""
    if s.space.case != "elliptic":
        return False
    from .geodesic_sub import orbit_invariants

    return orbit_invariants(s).p_prime == s.q


def _pair_density(space: ModelSpace, param, s_vals, t_vals, h=1e-5) -> np.ndarray:
    """|omega(d_s x, d_t x)| on a parameter grid, by central differences."""
    om = space.omega.matrix

    def batched(sv, tv):
        return param(sv, tv)

    xs_p = batched(s_vals + h, t_vals)
    xs_m = batched(s_vals - h, t_vals)
    xt_p = batched(s_vals, t_vals + h)
    xt_m = batched(s_vals, t_vals - h)
    ds = (xs_p - xs_m) / (2 * h)
    dt = (xt_p - xt_m) / (2 * h)
    return np.abs(np.einsum("dN,de,eN->N", ds, om, dt))


def _grid_1d(rule: tuple, count: int) -> tuple[np.ndarray, np.ndarray]:
    kind, a, b = rule
    if kind == "gl":
        nodes, weights = np.polynomial.legendre.leggauss(count)
        half = 0.5 * (b - a)
        return a + half * (nodes + 1.0), half * weights
    if kind == "periodic":
        nodes = a + (b - a) * np.arange(count) / count
        return nodes, np.full(count, (b - a) / count)
    # midpoint rule on [a, b]
    edges = np.linspace(a, b, count + 1)
    nodes = 0.5 * (edges[:-1] + edges[1:])
    return nodes, np.full(count, (b - a) / count)


def _induced_parametrization(sub_space: ModelSpace, truncation: Optional[float]):
    """Vectorized chart map (s, t) -> induced representatives, plus grid rules.

    Covers the two-dimensional submanifold classes; higher-dimensional
    compact orbits use Monte-Carlo quadrature instead.
    """
    if sub_space.n != 1:
        raise DimensionError("product-grid quadrature is implemented for q = 1")
    case = sub_space.case
    if case == "elliptic" and sub_space.klass.p == 1:
        k = sub_space.klass.k

        def param(c, phi):
            half = np.sqrt(np.clip((1.0 - c) / (1.0 + c), 0.0, np.inf))
            w = half * np.exp(1j * phi)
            norm = np.sqrt(k * (1.0 + np.abs(w) ** 2))
            z = np.stack([np.ones_like(w) / norm, w / norm])
            return np.concatenate([z.real, z.imag])

        return param, ("gl", -1.0 + 1e-12, 1.0 - 1e-12), ("periodic", 0.0, 2 * np.pi), True
    if truncation is None:
        raise DivergenceError("noncompact submanifold quadrature needs a truncation radius")
    r_tr = float(truncation)
    if case == "elliptic":
        k = sub_space.klass.k

        def param(sv, beta):
            z = np.stack(
                [np.cosh(sv) / np.sqrt(k) + 0j, np.sinh(sv) / np.sqrt(k) * np.exp(1j * beta)]
            )
            s = sub_space._signs()
            return np.concatenate([z.real, s[:, None] * z.imag])

        return param, ("gl", 0.0, r_tr), ("periodic", 0.0, 2 * np.pi), False
    if case == "hyperbolic":
        k = sub_space.klass.k

        def param(theta, rho):
            u_t = np.stack([np.cos(theta), np.sin(theta)])
            tang = np.stack([-np.sin(theta), np.cos(theta)])
            v_t = rho * tang
            w = v_t - u_t / (2 * k)
            s = np.sqrt(np.linalg.norm(w, axis=0))
            return np.concatenate([w / s, s * u_t])

        return param, ("periodic", 0.0, 2 * np.pi), ("midpoint", -r_tr, r_tr), False
    r_sub, p_sub = sub_space.klass.r, sub_space.klass.p
    cc = float(sub_space.cc_sign)
    if r_sub == 1:
        # point quadric times the symplectic plane W'
        def param(w1, w2):
            zero = np.zeros_like(w1)
            return np.stack([zero, cc * np.ones_like(w1), w1, w2])

        return param, ("midpoint", -r_tr, r_tr), ("midpoint", -r_tr, r_tr), False
    if p_sub == 2:

        def param(theta, rho):
            v = np.stack([np.cos(theta), np.sin(theta)])
            m_hat = np.stack([-np.sin(theta), np.cos(theta)])
            eta = rho * m_hat
            gm = sub_space._gmetric()
            a_star = -(gm[:, None] * eta)
            return np.concatenate([a_star, v])

        return param, ("periodic", 0.0, 2 * np.pi), ("midpoint", -r_tr, r_tr), False

    def param(sv, rho):
        v = np.stack([cc * np.cosh(sv), np.sinh(sv)])
        m_hat = np.stack([-np.sinh(sv), cc * np.cosh(sv)]) / np.sqrt(np.cosh(2 * sv))
        eta = rho * m_hat
        gm = sub_space._gmetric()
        a_star = -(gm[:, None] * eta)
        return np.concatenate([a_star, v])

    return param, ("midpoint", -r_tr, r_tr), ("midpoint", -r_tr, r_tr), False


def vol_form_quadrature(
    s: GeodesicSubmanifold,
    resolution: int = 24,
    truncation: Optional[float] = None,
) -> SubmanifoldQuadrature:
    """Product-grid quadrature with weights from the invariant area of S.

    Weights are the chart pullback of the reduced area form, evaluated from
    the Jacobian of the inverse chart map.  Compact case: Gauss-Legendre
    cross periodic grid; noncompact cases need a truncation radius.
    """
    if s.q == 0:
        return SubmanifoldQuadrature(
            "product-grid", resolution, s.space, s.base.rep[:, None], np.array([1.0])
        )
    sub_space, embed, _ = induced_embedding(s)
    param, s_rule, t_rule, _compact = _induced_parametrization(sub_space, truncation)
    s_nodes, s_w = _grid_1d(s_rule, resolution)
    t_nodes, t_w = _grid_1d(t_rule, 2 * resolution)
    sv, tv = [a.ravel() for a in np.meshgrid(s_nodes, t_nodes, indexing="ij")]
    wv = np.outer(s_w, t_w).ravel()
    density = _pair_density(sub_space, param, sv, tv)
    reps = embed @ param(sv, tv)
    return SubmanifoldQuadrature("product-grid", resolution, s.space, reps, wv * density)


def mc_quadrature(
    s: GeodesicSubmanifold, count: int, rng: np.random.Generator, resolution: int = 32
) -> SubmanifoldQuadrature:
    """Monte-Carlo quadrature on a compact submanifold (uniform in the volume)."""
    if not is_compact_submanifold(s):
        raise DivergenceError("Monte-Carlo quadrature needs a compact submanifold")
    sub_space, embed, y0 = induced_embedding(s)
    vol = (
        vol_form_quadrature(s, resolution).total_weight
        if s.q == 1
        else expected_compact_volume(s.space, s.q)
    )
    base = canonical_rep(sub_space, y0)
    cols = []
    for _ in range(count):
        b = haar_group_element(sub_space, rng)
        cols.append(embed @ (b.B @ base.rep))
    reps = np.column_stack(cols)
    return SubmanifoldQuadrature("monte-carlo", count, s.space, reps, np.full(count, vol / count))


def expected_compact_volume(space: ModelSpace, q: int) -> float:
    """Invariant volume (pi/k)^q / q! of the definite elliptic orbits."""
    if space.case != "elliptic":
        raise DimensionError("closed-form volume known for the elliptic case only")
    k = space.klass.k
    return float((np.pi / k) ** q / factorial(q))


def radon(f: DensityFunction, s: GeodesicSubmanifold, quad: SubmanifoldQuadrature) -> float:
    """Quadrature approximation of the integral of f over S."""
    if not is_compact_submanifold(s) and not np.isfinite(f.support_radius):
        raise DivergenceError("noncompact submanifold needs a compactly supported density")
    if f.vector_evaluator is not None:
        values = np.asarray(f.vector_evaluator(quad.reps), dtype=float)
    else:
        values = np.array([f.evaluator(p) for p in quad.points()])
    return float(np.dot(values, quad.weights))


# dual transform ----------------------------------------------------------


@dataclass(frozen=True)
class OrbitQuadrature:
    """Monte-Carlo sampling plan over the submanifolds through a point."""

    invariants: OrbitInvariants
    count: int
    seed: int = 0


@dataclass(frozen=True)
class MonteCarloResult:
    value: float
    stderr: float
    count: int


def submanifold_through(
    p: ModelPoint, q_dim: int, rng: np.random.Generator
) -> GeodesicSubmanifold:
    """A stabilizer-uniform submanifold through p (definite elliptic case).

    The stabilizer of the point acts on the complementary directions; Haar
    sampling there pushes forward to the unique invariant measure on the
    set of submanifolds through p.
    """
    space = p.space
    if space.case != "elliptic" or space.klass.p != space.n:
        raise NotImplementedError(
            "invariant measures on the submanifolds through a point are "
            "constructed for the definite elliptic case only"
        )
    n1 = space.n + 1
    z_p = space.to_complex(p.rep)
    frame = _complete_pseudo_unitary(space, z_p)
    u_small = haar_unitary(space.n, rng)
    block = np.eye(n1, dtype=complex)
    block[1:, 1:] = u_small
    rotation = frame @ block @ np.conj(frame.T)
    b = GroupElement(space, complex_to_real_matrix(space, rotation))
    cols = [frame[:, i] for i in range(q_dim + 1)]
    w_real = []
    for c in cols:
        x_re = space.from_complex(c)
        w_real.extend([x_re, space.from_complex(1j * c)])
    w_basis, _ = np.linalg.qr(np.column_stack(w_real))
    ref = GeodesicSubmanifold(space, w_basis, p, q_dim)
    sample = act_on_submanifold(b, ref)
    if membership_residual(sample, p) > 1e-8:
        raise SamplerError("stabilizer sample does not pass through the point")
    return GeodesicSubmanifold(space, sample.w_basis, p, q_dim)


def dual_radon(
    f_on_n: Callable[[GeodesicSubmanifold], float],
    p: ModelPoint,
    quad: OrbitQuadrature,
) -> MonteCarloResult:
    """Monte-Carlo mean of F over the submanifolds through p.

    The sampling measure is probability-normalized, so F = 1 returns 1.
    """
    rng = np.random.default_rng(quad.seed)
    values = np.empty(quad.count)
    for i in range(quad.count):
        values[i] = f_on_n(submanifold_through(p, quad.invariants.q, rng))
    stderr = float(values.std(ddof=1) / np.sqrt(quad.count)) if quad.count > 1 else 0.0
    return MonteCarloResult(float(values.mean()), stderr, quad.count)


def radon_functional(
    f: DensityFunction, resolution: int = 16, truncation: Optional[float] = None
) -> Callable[[GeodesicSubmanifold], float]:
    """F(S) = radon(f, S) with a fixed per-submanifold quadrature rule."""

    def f_on_n(s: GeodesicSubmanifold) -> float:
        return radon(f, s, vol_form_quadrature(s, resolution, truncation))

    return f_on_n


def duality_sides(
    f: DensityFunction,
    g: DensityFunction,
    space: ModelSpace,
    invariants: OrbitInvariants,
    n_samples: int,
    seed: int = 0,
    resolution: int = 16,
) -> dict:
    """Monte-Carlo estimates of the two duality pairings with F = Rad g.

    Left side: E[Rad f(S) F(S)] over the full orbit of submanifolds.
    Right side: E[f(x) F(S)] over uniform points x and submanifolds through
    x.  With probability-normalized measures the two differ by the constant
    c = vol(S).  All submanifolds in one orbit share the chart quadrature
    template, so each sample is a single matrix action on the reference
    nodes.
    """
    if space.case != "elliptic" or space.klass.p != space.n:
        raise NotImplementedError("the duality universe is the definite elliptic case")
    rng = np.random.default_rng(seed)
    base = space.reference_point()
    ref = reference_submanifold(space, invariants)
    quad0 = vol_form_quadrature(ref, resolution)
    reps0, weights0 = quad0.reps, quad0.weights
    n1 = space.n + 1

    def rad_along(b_mat: np.ndarray, density: DensityFunction) -> float:
        return float(np.dot(density.vector_evaluator(b_mat @ reps0), weights0))

    def stabilizer_rotation() -> np.ndarray:
        u_small = haar_unitary(space.n, rng)
        block = np.eye(n1, dtype=complex)
        block[1:, 1:] = u_small
        return complex_to_real_matrix(space, block)

    lhs_vals = np.empty(n_samples)
    for i in range(n_samples):
        b_i = haar_group_element(space, rng).B
        lhs_vals[i] = rad_along(b_i, f) * rad_along(b_i, g)
    rhs_vals = np.empty(n_samples)
    for i in range(n_samples):
        b_i = haar_group_element(space, rng).B
        x_i = canonical_rep(space, b_i @ base.rep)
        move = b_i @ stabilizer_rotation()
        rhs_vals[i] = f.evaluator(x_i) * rad_along(move, g)
    return {
        "lhs": float(lhs_vals.mean()),
        "lhs_stderr": float(lhs_vals.std(ddof=1) / np.sqrt(n_samples)),
        "rhs": float(rhs_vals.mean()),
        "rhs_stderr": float(rhs_vals.std(ddof=1) / np.sqrt(n_samples)),
        "count": n_samples,
    }


# classical R^3 transform --------------------------------------------------


@dataclass(frozen=True, eq=False)
class PlaneR3:
    """The plane x . omega = p; (omega, p) and (-omega, -p) coincide."""

    omega: np.ndarray
    p: float

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        if w.shape != (3,):
            raise DimensionError("plane normal must be a 3-vector")
        nrm = float(np.linalg.norm(w))
        if abs(nrm - 1.0) > 1e-9:
            raise DimensionError("plane normal must be a unit vector")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "omega", w)


@dataclass(frozen=True, eq=False)
class R3Density:
    """A function on R^3 with a finite effective support radius.

    evaluator must accept arrays of shape (..., 3).
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    support_radius: float


def registry_r3(name: str) -> R3Density:
    if name == "gaussian":
        return R3Density(lambda x: np.exp(-np.sum(x * x, axis=-1)), 6.0)
    if name == "bump":

        def bump(x):
            r2 = np.sum(x * x, axis=-1)
            out = np.zeros_like(r2)
            inside = r2 < 1.0
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
            return out

        return R3Density(bump, 1.0)
    if name == "zonal-harmonic":
        return R3Density(lambda x: x[..., 2] * np.exp(-np.sum(x * x, axis=-1)), 6.5)
    raise DimensionError(f"unknown R^3 registry density {name!r}")


def plane_frame(omega: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """A deterministic orthonormal basis of the plane through the origin."""
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(omega)))] = 1.0
    e1 = np.cross(omega, axis)
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(omega, e1)
    return e1, e2


def r3_radon(f: R3Density, plane: PlaneR3, grid: int = 61) -> float:
    """Product-grid integral of f over the plane patch covering its support."""
    if not np.isfinite(f.support_radius):
        raise DivergenceError("plane integrals need a finite support radius")
    e1, e2 = plane_frame(plane.omega)
    r = f.support_radius
    coords = np.linspace(-r, r, grid)
    h = coords[1] - coords[0]
    s, t = np.meshgrid(coords, coords, indexing="ij")
    pts = (
        plane.p * plane.omega[None, None, :]
        + s[..., None] * e1[None, None, :]
        + t[..., None] * e2[None, None, :]
    )
    return float(np.sum(f.evaluator(pts)) * h * h)


def sphere_quadrature(n_polar: int = 32, n_az: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre in cos(theta) times a uniform azimuthal grid."""
    c_nodes, c_weights = np.polynomial.legendre.leggauss(n_polar)
    phi = 2 * np.pi * np.arange(n_az) / n_az
    sin_t = np.sqrt(1.0 - c_nodes**2)
    omegas = np.empty((n_polar * n_az, 3))
    weights = np.empty(n_polar * n_az)
    idx = 0
    for i in range(n_polar):
        for j in range(n_az):
            omegas[idx] = (sin_t[i] * np.cos(phi[j]), sin_t[i] * np.sin(phi[j]), c_nodes[i])
            weights[idx] = c_weights[i] * (2 * np.pi / n_az)
            idx += 1
    return omegas, weights


class SinogramInterpolator:
    """Per-direction Chebyshev interpolation of the sinogram in the offset.

    J(omega_i, .) is sampled at Chebyshev-Lobatto nodes on [-p_max, p_max],
    converted to Chebyshev coefficients, and evaluated by the Clenshaw
    recurrence; offsets beyond the support return zero.
    """

    def __init__(
        self,
        f: R3Density,
        omegas: np.ndarray,
        p_max: Optional[float] = None,
        n_nodes: int = 72,
        plane_grid: int = 41,
    ):
        from scipy.fft import dct

        self.omegas = np.asarray(omegas, dtype=float)
        self.p_max = float(p_max if p_max is not None else f.support_radius)
        t_nodes = np.cos(np.pi * np.arange(n_nodes) / (n_nodes - 1))
        self.p_nodes = self.p_max * t_nodes
        coords = np.linspace(-f.support_radius, f.support_radius, plane_grid)
        h = coords[1] - coords[0]
        s, t = np.meshgrid(coords, coords, indexing="ij")
        st = np.stack([s.ravel(), t.ravel()], axis=-1)  # (G, 2) plane coordinates
        table = np.empty((len(self.omegas), n_nodes))
        chunk = max(1, int(2e6 / (n_nodes * st.shape[0])) or 1)
        for start in range(0, len(self.omegas), chunk):
            block = self.omegas[start : start + chunk]
            frames = np.array([plane_frame(w) for w in block])  # (B, 2, 3)
            pts = (
                self.p_nodes[None, :, None, None] * block[:, None, None, :]
                + np.einsum("gc,bcd->bgd", st, frames)[:, None, :, :]
            )
            table[start : start + chunk] = np.sum(f.evaluator(pts), axis=2) * h * h
        self.table = table
        coeff = dct(table, type=1, axis=1) / (n_nodes - 1)
        coeff[:, 0] *= 0.5
        coeff[:, -1] *= 0.5
        self.coeff = coeff

    def __call__(self, p_matrix: np.ndarray) -> np.ndarray:
        """Evaluate J(omega_i, P[..., i]) for P of shape (..., n_omegas)."""
        p = np.atleast_2d(np.asarray(p_matrix, dtype=float))
        out = np.empty_like(p)
        deg = self.coeff.shape[1] - 1
        block_rows = max(1, int(2.5e5 / p.shape[-1]))  # keep buffers cache-resident
        for start in range(0, p.shape[0], block_rows):
            pb = p[start : start + block_rows]
            t = np.clip(pb / self.p_max, -1.0, 1.0)
            two_t = 2.0 * t
            b1 = np.broadcast_to(self.coeff[:, deg], t.shape).copy()
            b2 = np.zeros_like(t)
            scratch = np.empty_like(t)
            for k in range(deg - 1, 0, -1):
                np.multiply(two_t, b1, out=scratch)
                scratch -= b2
                scratch += self.coeff[:, k]
                b1, b2, scratch = scratch, b1, b2
            np.multiply(t, b1, out=scratch)
            scratch -= b2
            scratch += self.coeff[:, 0]
            scratch[np.abs(pb) > self.p_max] = 0.0
            out[start : start + block_rows] = scratch
        return out.reshape(np.shape(p_matrix))


def r3_inverse(
    jfun: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x: np.ndarray,
    sphere: Optional[tuple[np.ndarray, np.ndarray]] = None,
    fd_step: float = 1e-2,
) -> float:
    """Pointwise inversion -(1/8 pi^2) L_x integral_{S^2} J(w, w . x) dw.

    jfun(omegas, offsets) must evaluate the sinogram on matched arrays; the
    Laplacian is the 7-point second difference at steps h and h/2 combined
    by Richardson extrapolation.
    """
    if fd_step <= 0:
        raise DimensionError("fd_step must be positive")
    omegas, weights = sphere if sphere is not None else sphere_quadrature()
    x = np.asarray(x, dtype=float)

    def phi(y: np.ndarray) -> float:
        return float(np.dot(weights, jfun(omegas, omegas @ y)))

    phi0 = phi(x)

    def laplacian(h: float) -> float:
        total = 0.0
        for axis in range(3):
            e = np.zeros(3)
            e[axis] = h
            total += phi(x + e) - 2.0 * phi0 + phi(x - e)
        return total / (h * h)

    lap = (4.0 * laplacian(0.5 * fd_step) - laplacian(fd_step)) / 3.0
    return -lap / (8.0 * np.pi**2)


def r3_reconstruct(
    f: R3Density,
    points: np.ndarray,
    n_polar: int = 32,
    n_az: int = 64,
    plane_grid: int = 41,
    n_nodes: int = 72,
    fd_step: float = 1e-2,
    chunk: int = 2048,
    p_max: Optional[float] = None,
) -> np.ndarray:
    """End-to-end pipeline: sinogram of f, then the Laplacian inversion.

    The sinogram is even under (omega, p) -> (-omega, -p), so only the
    upper half sphere is tabulated and every node counts twice.
    """
    omegas, weights = sphere_quadrature(n_polar, n_az)
    upper = omegas[:, 2] > 0
    omegas_h, weights_h = omegas[upper], 2.0 * weights[upper]
    interp = SinogramInterpolator(f, omegas_h, p_max=p_max, n_nodes=n_nodes, plane_grid=plane_grid)

    points = np.asarray(points, dtype=float)
    n_pts = points.shape[0]
    offsets = [np.zeros(3)]
    for h in (fd_step, 0.5 * fd_step):
        for axis in range(3):
            e = np.zeros(3)
            e[axis] = h
            offsets.append(e)
            offsets.append(-e)
    offsets = np.array(offsets)  # 13 evaluation shifts per point

    phi = np.empty((n_pts, len(offsets)))
    for start in range(0, n_pts, chunk):
        block = points[start : start + chunk]
        shifted = block[:, None, :] + offsets[None, :, :]
        flat = shifted.reshape(-1, 3)
        p_matrix = flat @ omegas_h.T
        phi[start : start + chunk] = (interp(p_matrix) @ weights_h).reshape(
            block.shape[0], len(offsets)
        )

    phi0 = phi[:, 0]
    lap_h = (phi[:, 1] + phi[:, 2] + phi[:, 3] + phi[:, 4] + phi[:, 5] + phi[:, 6] - 6 * phi0) / (
        fd_step**2
    )
    half = 0.5 * fd_step
    lap_h2 = (
        phi[:, 7] + phi[:, 8] + phi[:, 9] + phi[:, 10] + phi[:, 11] + phi[:, 12] - 6 * phi0
    ) / (half**2)
    lap = (4.0 * lap_h2 - lap_h) / 3.0
    return -lap / (8.0 * np.pi**2)
