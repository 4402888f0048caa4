"""The reduced model space M_A.

Points are equivalence classes on the level set Sigma_A = {Omega(x, Ax) = 1}
modulo the flow of exp(tA), carried by explicit representatives in the case
normal-form coordinates.  The module provides canonical representatives,
horizontal lifts, the reduced 2-form, geodesics of the reduced connection,
geodesic symmetries, and the case chart maps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .ambient import (
    DEFAULT_TOL,
    Generator,
    GeneratorClass,
    SymplecticForm,
    generator_from_dict,
    adapted_basis,
    classify_generator,
    normal_form,
)
from .errors import (
    DimensionError,
    IntegrationFailureError,
    OffLevelSetError,
)

POINT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ModelSpace:
    """A model M_A in normal-form coordinates.

    cc_sign selects the connected component in the nilpotent p = 1 case,
    where the quadric {g(v, v) = 1} has two sheets; +1 keeps v^1 > 0.
    """

    omega: SymplecticForm
    generator: Generator
    klass: GeneratorClass
    n: int
    cc_sign: int = 1

    @property
    def dim_ambient(self) -> int:
        return 2 * (self.n + 1)

    @property
    def dim(self) -> int:
        return 2 * self.n

    def pair(self, x: np.ndarray, y: np.ndarray) -> float:
        return self.omega.pair(x, y)

    def apply_a(self, x: np.ndarray) -> np.ndarray:
        return self.generator.A @ x

    def level(self, x: np.ndarray) -> float:
        """The reduction Hamiltonian value Omega(x, Ax)."""
        return self.omega.pair(x, self.generator.A @ x)

    # case bookkeeping -------------------------------------------------

    @property
    def case(self) -> str:
        return self.klass.case

    def _uv(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        d = self.n + 1
        return x[:d], x[d:]

    def _signs(self) -> np.ndarray:
        p = self.klass.p
        return np.concatenate([np.ones(p + 1), -np.ones(self.n - p)])

    def to_complex(self, x: np.ndarray) -> np.ndarray:
        """Complex coordinates z with Az = i k z (elliptic case only)."""
        u, v = self._uv(x)
        return u + 1j * self._signs() * v

    def from_complex(self, z: np.ndarray) -> np.ndarray:
        s = self._signs()
        return np.concatenate([z.real, s * z.imag])

    def _blocks(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        r = self.klass.r
        return x[:r], x[r : 2 * r], x[2 * r :]

    def _gmetric(self) -> np.ndarray:
        r, p = self.klass.r, self.klass.p
        return np.concatenate([np.ones(p), -np.ones(r - p)])

    def exp_ta(self, t: float) -> np.ndarray:
        """The flow matrix exp(tA), in closed form per case."""
        d = self.dim_ambient
        if self.case == "hyperbolic":
            k = self.klass.k
            half = self.n + 1
            return np.diag(
                np.concatenate([np.full(half, np.exp(k * t)), np.full(half, np.exp(-k * t))])
            )
        if self.case == "elliptic":
            k = self.klass.k
            j = self.generator.A / k
            return np.cos(k * t) * np.eye(d) + np.sin(k * t) * j
        return np.eye(d) + t * self.generator.A

    # representatives ---------------------------------------------------

    def in_component(self, x: np.ndarray) -> bool:
        if self.case == "nilpotent" and self.klass.p == 1:
            _, v, _ = self._blocks(x)
            return v[0] * self.cc_sign > 0
        return True

    def canonicalize(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Canonical orbit representative and the flow matrix reaching it."""
        x = np.asarray(x, dtype=float)
        if self.case == "hyperbolic":
            u, v = self._uv(x)
            k = self.klass.k
            t = float(np.log(np.linalg.norm(v) / np.linalg.norm(u))) / (2 * k)
            g = self.exp_ta(t)
            return g @ x, g
        if self.case == "elliptic":
            z = self.to_complex(x)
            mags = np.abs(z)
            idx = int(np.argmax(mags >= 1e-9 * mags.max()))
            theta = float(np.angle(z[idx]))
            g = self.exp_ta(-theta / self.klass.k)
            return g @ x, g
        a, v, _ = self._blocks(x)
        gm = self._gmetric()
        t = -float(a @ (gm * v))  # g(v, v) = 1 on the level set
        g = self.exp_ta(t)
        return g @ x, g

    def reference_point(self) -> "ModelPoint":
        """A canonical base point per case."""
        d = self.dim_ambient
        x = np.zeros(d)
        if self.case == "hyperbolic":
            k = self.klass.k
            x[0] = -1.0 / (2 * k)
            x[self.n + 1] = 1.0
        elif self.case == "elliptic":
            x[0] = 1.0 / np.sqrt(self.klass.k)
        else:
            x[self.klass.r] = float(self.cc_sign)
        return canonical_rep(self, x)

    def random_point(self, rng: np.random.Generator) -> "ModelPoint":
        """A random point, sampled from Gaussian representatives."""
        d = self.dim_ambient
        for _ in range(200):
            if self.case == "nilpotent":
                r = self.klass.r
                gm = self._gmetric()
                v = rng.standard_normal(r)
                q = float(v @ (gm * v))
                if q < 0.05 * float(v @ v):
                    continue
                v = v / np.sqrt(q)
                if self.klass.p == 1 and v[0] * self.cc_sign < 0:
                    v = -v
                x = np.concatenate([rng.standard_normal(r), v, rng.standard_normal(d - 2 * r)])
                return canonical_rep(self, x)
            x = rng.standard_normal(d)
            q = self.level(x)
            if q < 0.05 * float(x @ x):
                continue
            return canonical_rep(self, x / np.sqrt(q))
        raise OffLevelSetError("could not sample a representative on the level set")

    def random_horizontal(
        self, p: "ModelPoint", rng: np.random.Generator, norm: float = 1.0
    ) -> "HorizontalVector":
        v = horizontal_project(p, rng.standard_normal(self.dim_ambient)).vec
        return HorizontalVector(p, v * (norm / np.linalg.norm(v)))


@dataclass(frozen=True, eq=False)
class ModelPoint:
    """A point of M_A carried by a representative on the level set."""

    space: ModelSpace
    rep: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.rep, dtype=float).copy()
        if x.shape != (self.space.dim_ambient,):
            raise DimensionError("representative has the wrong dimension")
        x.flags.writeable = False
        object.__setattr__(self, "rep", x)


@dataclass(frozen=True, eq=False)
class HorizontalVector:
    """A tangent vector to M_A given by its horizontal lift at base.rep."""

    base: ModelPoint
    vec: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vec, dtype=float).copy()
        if v.shape != self.base.rep.shape:
            raise DimensionError("vector has the wrong dimension")
        v.flags.writeable = False
        object.__setattr__(self, "vec", v)


def model_space(klass: GeneratorClass, n: int, cc_sign: int = 1) -> ModelSpace:
    """Construct the model M_A for a classified generator in normal form."""
    omega, gen = normal_form(klass, n)
    return ModelSpace(omega, gen, klass, n, cc_sign)


def model_space_from_dict(data: dict, cc_sign: int = 1) -> ModelSpace:
    """Model space from the structured generator description."""
    omega, gen, klass = generator_from_dict(data)
    n = omega.dim // 2 - 1
    if "matrix" in data:
        # explicit generators are moved to normal-form coordinates first
        adapted_basis(omega, gen)
        return model_space(klass, n, cc_sign)
    return ModelSpace(omega, gen, klass, n, cc_sign)


def canonical_rep(space: ModelSpace, x, tol: float = POINT_TOL) -> ModelPoint:
    """Canonical orbit representative of a level-set vector.

    Case rules: hyperbolic rescales so |u| = |v|; elliptic rotates the phase
    so the first nonzero complex coordinate is real positive; nilpotent
    shears so that g(a, v) = 0.
    """
    x = np.asarray(x, dtype=float)
    lvl = space.level(x)
    if abs(lvl - 1.0) > tol:
        raise OffLevelSetError(f"Omega(x, Ax) = {lvl!r} is not 1 within {tol}")
    xc, _ = space.canonicalize(x)
    if not space.in_component(xc):
        raise OffLevelSetError("representative lies in the other connected component")
    return ModelPoint(space, xc)


def same_space(a: ModelSpace, b: ModelSpace) -> bool:
    """Whether two space objects describe the same model."""
    return a is b or (
        a.case == b.case
        and a.n == b.n
        and a.cc_sign == b.cc_sign
        and np.array_equal(a.generator.A, b.generator.A)
    )


def rep_distance(p: ModelPoint, q: ModelPoint) -> float:
    """Distance of canonical representatives, relative to their scale.

    Noncompact cases have unbounded representatives, so comparisons are
    normalized by max(1, |a|, |b|) to stay meaningful at any scale.
    """
    if not same_space(p.space, q.space):
        raise DimensionError("points belong to different model spaces")
    a, _ = p.space.canonicalize(p.rep)
    b, _ = q.space.canonicalize(q.rep)
    scale = max(1.0, float(np.abs(a).max()), float(np.abs(b).max()))
    return float(np.abs(a - b).max()) / scale


def points_equal(p: ModelPoint, q: ModelPoint, tol: float = 1e-8) -> bool:
    """True iff the canonical representatives agree within tol (scale-relative)."""
    return rep_distance(p, q) <= tol


def horizontal_at(space: ModelSpace, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Horizontal part of w at x: remove the span of x and Ax.

    With c = Omega(x, Ax), the unique coefficients follow from
    Omega(Ax, Ax) = Omega(x, x) = 0, so the 2x2 system is diagonal.
    """
    ax = space.apply_a(x)
    c = space.pair(x, ax)
    a = space.pair(w, ax) / c
    b = -space.pair(w, x) / c
    return w - a * x - b * ax


def horizontal_project(p: ModelPoint, w) -> HorizontalVector:
    """Project an ambient vector to the horizontal space at p."""
    w = np.asarray(w, dtype=float)
    return HorizontalVector(p, horizontal_at(p.space, p.rep, w))


def _check_based(p: ModelPoint, *vectors: HorizontalVector):
    for v in vectors:
        if not same_space(v.base.space, p.space) or np.abs(v.base.rep - p.rep).max() > 1e-7:
            raise DimensionError("vector is not based at the given point")


def omega_red(p: ModelPoint, x_vec: HorizontalVector, y_vec: HorizontalVector) -> float:
    """The reduced form: the ambient pairing of the horizontal lifts."""
    _check_based(p, x_vec, y_vec)
    return p.space.pair(x_vec.vec, y_vec.vec)


# geodesics ------------------------------------------------------------


def _geodesic_rhs(space: ModelSpace, x: np.ndarray, v: np.ndarray):
    # c'' = Omega(Ac', c') c; the vertical candidate term vanishes because
    # Omega(c', c) is conserved only with a zero coefficient.
    kappa = space.pair(space.apply_a(v), v)
    return v, kappa * x


def _reproject(space: ModelSpace, x: np.ndarray, v: np.ndarray):
    lvl = space.level(x)
    if not lvl > 0:
        raise IntegrationFailureError("trajectory left the positive level-set region")
    x = x / np.sqrt(lvl)
    return x, horizontal_at(space, x, v)


def geodesic_steps(
    space: ModelSpace,
    x0: np.ndarray,
    v0: np.ndarray,
    t: float,
    step: float,
):
    """Integrate the reduced geodesic flow, yielding (t_i, x_i, v_i).

    Classical fourth-order one-step method with per-step radial
    re-projection onto the level set and re-orthogonalization of the
    velocity against {x, Ax}.
    """
    if step <= 0:
        raise IntegrationFailureError("step must be positive")
    n_steps = max(1, int(np.ceil(abs(t) / step)))
    h = t / n_steps
    x, v = x0.astype(float).copy(), v0.astype(float).copy()
    yield 0.0, x.copy(), v.copy()
    for i in range(n_steps):
        k1x, k1v = _geodesic_rhs(space, x, v)
        k2x, k2v = _geodesic_rhs(space, x + 0.5 * h * k1x, v + 0.5 * h * k1v)
        k3x, k3v = _geodesic_rhs(space, x + 0.5 * h * k2x, v + 0.5 * h * k2v)
        k4x, k4v = _geodesic_rhs(space, x + h * k3x, v + h * k3v)
        x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        x, v = _reproject(space, x, v)
        yield (i + 1) * h, x.copy(), v.copy()


def geodesic(
    p: ModelPoint,
    x_vec: HorizontalVector,
    t: float,
    step: float = 1e-3,
    drift_tol: float = 1e-6,
) -> tuple[ModelPoint, HorizontalVector]:
    """The geodesic of the reduced connection from p with velocity X at time t."""
    _check_based(p, x_vec)
    space = p.space
    x, v = p.rep, x_vec.vec
    for _, x, v in geodesic_steps(space, p.rep, x_vec.vec, t, step):
        pass
    drift = abs(space.level(x) - 1.0)
    if drift > drift_tol:
        raise IntegrationFailureError(f"level-set drift {drift:.2e} exceeds {drift_tol:.2e}")
    xc, g = space.canonicalize(x)
    point = ModelPoint(space, xc)
    return point, HorizontalVector(point, g @ v)


def geodesic_trace(
    p: ModelPoint, x_vec: HorizontalVector, t: float, step: float = 1e-3
) -> np.ndarray:
    """Trace rows (t, x..., level residual, Omega(v,x), Omega(v,Ax))."""
    _check_based(p, x_vec)
    space = p.space
    rows = []
    for ti, x, v in geodesic_steps(space, p.rep, x_vec.vec, t, step):
        ax = space.apply_a(x)
        rows.append(
            np.concatenate(
                [
                    [ti],
                    x,
                    [space.level(x) - 1.0, space.pair(v, x), space.pair(v, ax)],
                ]
            )
        )
    return np.array(rows)


# geodesic symmetries ---------------------------------------------------


def symmetry_matrix(space: ModelSpace, x: np.ndarray) -> np.ndarray:
    """The ambient reflection S_x(v) = -v - 2 Omega(v,x) Ax + 2 Omega(v,Ax) x."""
    ax = space.apply_a(x)
    om = space.omega.matrix
    return -np.eye(space.dim_ambient) - 2.0 * np.outer(ax, om @ x) + 2.0 * np.outer(x, om @ ax)


def symmetry(p: ModelPoint, q: ModelPoint) -> ModelPoint:
    """The geodesic symmetry s_p applied to q."""
    if not same_space(p.space, q.space):
        raise DimensionError("points belong to different model spaces")
    s = symmetry_matrix(p.space, p.rep)
    return canonical_rep(p.space, s @ q.rep)


# charts ---------------------------------------------------------------


@dataclass(frozen=True)
class CotangentSphereChart:
    """Case 1 chart: (u~, v~) with |u~| = 1 and u~ . v~ = 0."""

    u_tilde: np.ndarray
    v_tilde: np.ndarray


@dataclass(frozen=True)
class ProjectiveChart:
    """Case 2 chart: the phase-fixed complex representative."""

    z: np.ndarray


@dataclass(frozen=True)
class CotangentQuadricChart:
    """Case 3 chart: (v, covector, w) on T*Q x W."""

    v: np.ndarray
    covector: np.ndarray
    w: np.ndarray


Chart = Union[CotangentSphereChart, ProjectiveChart, CotangentQuadricChart]


def to_chart(p: ModelPoint) -> Chart:
    """Case chart coordinates of a point."""
    space = p.space
    if space.case == "hyperbolic":
        u, v = space._uv(p.rep)
        k = space.klass.k
        nv = np.linalg.norm(v)
        u_t = v / nv
        v_t = nv * u + (1.0 / (2 * k)) * u_t
        return CotangentSphereChart(u_t, v_t)
    if space.case == "elliptic":
        xc, _ = space.canonicalize(p.rep)
        return ProjectiveChart(space.to_complex(xc))
    a, v, w = space._blocks(p.rep)
    gm = space._gmetric()
    a_star = a - float(a @ (gm * v)) * v
    return CotangentQuadricChart(v.copy(), -(gm * a_star), w.copy())


def from_chart(space: ModelSpace, chart: Chart, tol: float = 1e-7) -> ModelPoint:
    """Inverse chart map; validates the chart constraints."""
    if isinstance(chart, CotangentSphereChart):
        if space.case != "hyperbolic":
            raise DimensionError("chart does not match the space's case")
        u_t, v_t = chart.u_tilde, chart.v_tilde
        if abs(np.linalg.norm(u_t) - 1.0) > tol or abs(float(u_t @ v_t)) > tol:
            raise OffLevelSetError("chart constraints |u~| = 1, u~ . v~ = 0 violated")
        k = space.klass.k
        w = v_t - (1.0 / (2 * k)) * u_t
        s = np.sqrt(np.linalg.norm(w))
        return canonical_rep(space, np.concatenate([w / s, s * u_t]))
    if isinstance(chart, ProjectiveChart):
        if space.case != "elliptic":
            raise DimensionError("chart does not match the space's case")
        return canonical_rep(space, space.from_complex(np.asarray(chart.z, dtype=complex)))
    if space.case != "nilpotent":
        raise DimensionError("chart does not match the space's case")
    gm = space._gmetric()
    v = np.asarray(chart.v, dtype=float)
    eta = np.asarray(chart.covector, dtype=float)
    if abs(float(v @ (gm * v)) - 1.0) > tol or abs(float(eta @ v)) > tol:
        raise OffLevelSetError("chart constraints g(v,v) = 1, eta(v) = 0 violated")
    a_star = -(gm * eta)
    return canonical_rep(space, np.concatenate([a_star, v, np.asarray(chart.w, dtype=float)]))


# local coordinates around a point --------------------------------------


class TangentFrame:
    """Local coordinates xi -> pi(normalize(x0 + E xi)) around a base point.

    E is an orthonormal basis of the horizontal space at x0, so the chart
    differential at 0 is the identity on the horizontal space.  Lifted
    coordinate fields and their vertical defects are available at nearby
    xi, which is what the finite-difference connection needs.
    """

    def __init__(self, space: ModelSpace, point: ModelPoint):
        self.space = space
        self.x0 = point.rep
        d = space.dim_ambient
        ax = space.apply_a(self.x0)
        om = space.omega.matrix
        proj = np.eye(d) - np.outer(self.x0, om @ ax) + np.outer(ax, om @ self.x0)
        u, sv, _ = np.linalg.svd(proj)
        self.basis = u[:, : space.dim]  # columns span the horizontal space
        if sv[space.dim - 1] < 0.5:
            raise DimensionError("horizontal projector is rank deficient")

    def rep_at(self, xi: np.ndarray) -> np.ndarray:
        y = self.x0 + self.basis @ xi
        return y / np.sqrt(self.space.level(y))

    def d_rep(self, xi: np.ndarray) -> np.ndarray:
        """Analytic differential of rep_at; columns are tangent to the level set."""
        y = self.x0 + self.basis @ xi
        q = self.space.level(y)
        grad = 2.0 * (self.space.omega.matrix @ self.space.apply_a(y))  # gradient of the level
        coeff = (self.basis.T @ grad) / (2.0 * q**1.5)
        return self.basis / np.sqrt(q) - np.outer(y, coeff)

    def lift(self, xi: np.ndarray) -> np.ndarray:
        """Horizontal lifts of the coordinate fields at rep_at(xi)."""
        x = self.rep_at(xi)
        dx = self.d_rep(xi)
        om = self.space.omega.matrix
        ax = self.space.apply_a(x)
        c = self.space.pair(x, ax)
        a_coef = (dx.T @ (om @ ax)) / c
        b_coef = -(dx.T @ (om @ x)) / c
        return dx - np.outer(x, a_coef) - np.outer(ax, b_coef)

    def vertical_defect(self, xi: np.ndarray) -> np.ndarray:
        """Coefficients of Ax in the coordinate tangents: d_rep = lift + tau * Ax."""
        x = self.rep_at(xi)
        dx = self.d_rep(xi)
        return -(dx.T @ (self.space.omega.matrix @ x))

    def components(self, xi: np.ndarray, vectors: np.ndarray) -> np.ndarray:
        """Chart components of horizontal vectors at rep_at(xi)."""
        lift = self.lift(xi)
        sol, *_ = np.linalg.lstsq(lift, vectors, rcond=None)
        return sol

    def omega_frame(self, xi: np.ndarray) -> np.ndarray:
        lift = self.lift(xi)
        return lift.T @ self.space.omega.matrix @ lift

    def coords_of(self, rep: np.ndarray, max_iter: int = 40, tol: float = 1e-12) -> np.ndarray:
        """Chart coordinates of a nearby point, solving across the orbit.

        Gauss-Newton on exp(tA) rep_at(xi) = rep over (xi, t); the target
        must be close enough to the chart patch for the iteration to
        contract.
        """
        space = self.space
        dim = space.dim
        xi = np.zeros(dim)
        t = 0.0
        target = np.asarray(rep, dtype=float)
        for _ in range(max_iter):
            x = self.rep_at(xi)
            g = space.exp_ta(t)
            cur = g @ x
            res = cur - target
            if np.abs(res).max() < tol:
                return xi
            jac = np.column_stack([g @ self.d_rep(xi), space.apply_a(cur)])
            delta, *_ = np.linalg.lstsq(jac, -res, rcond=None)
            xi = xi + delta[:dim]
            t = t + delta[dim]
        raise DimensionError("chart coordinate solve did not converge")
