"""Totally geodesic symplectic submanifolds of the models.

A submanifold is carried by an A-stable symplectic subspace W containing a
base representative and its generator image; tangent data V at a point
determines W = span(V) + R x + R Ax.  Membership, induced model structure,
and the orbit invariants of the classification are provided.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ambient import (
    darboux_basis,
    classify_generator,
    make_generator,
    standard_form,
    symmetric_signature,
)
from .errors import (
    DimensionError,
    NotSymplecticError,
    SamplerError,
    StabilityError,
)
from .model import (
    HorizontalVector,
    ModelPoint,
    ModelSpace,
    canonical_rep,
    geodesic_steps,
    horizontal_at,
    model_space,
    same_space,
)
from .group import GroupElement, act, haar_group_element, random_group_element

SUB_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class GeodesicSubmanifold:
    """S = (Sigma_A intersect W / exp tA)_cc for an A-stable symplectic W."""

    space: ModelSpace
    w_basis: np.ndarray  # orthonormal columns spanning W, shape (2n+2, 2q+2)
    base: ModelPoint
    q: int

    def __post_init__(self):
        w = np.asarray(self.w_basis, dtype=float).copy()
        w.flags.writeable = False
        object.__setattr__(self, "w_basis", w)

    @property
    def projector(self) -> np.ndarray:
        return self.w_basis @ self.w_basis.T


@dataclass(frozen=True)
class OrbitInvariants:
    """Identifiers of the group orbit of a maximal submanifold.

    Hyperbolic carries only q; elliptic adds the Hermitian signature p';
    nilpotent adds (r', p') with 2m' = 2q - 2r' + 2.
    """

    q: int
    p_prime: Optional[int] = None
    r_prime: Optional[int] = None

    @property
    def m_prime(self) -> Optional[int]:
        if self.r_prime is None:
            return None
        return self.q - self.r_prime + 1


def submanifold_from_tangent(
    p: ModelPoint,
    vectors: list[HorizontalVector],
    tol: float = SUB_TOL,
) -> GeodesicSubmanifold:
    """Build the maximal totally geodesic submanifold tangent to span(vectors).

    Requires the span to be symplectic and stable under the Ricci
    endomorphism, equivalently W = span + R x + R Ax stable under A.
    """
    space = p.space
    if len(vectors) % 2 != 0 or not vectors:
        raise DimensionError("tangent data must consist of 2q vectors")
    for v in vectors:
        if not same_space(v.base.space, space) or np.abs(v.base.rep - p.rep).max() > 1e-7:
            raise DimensionError("tangent vectors must be based at the given point")
    v_mat = np.column_stack([v.vec for v in vectors])
    gram = v_mat.T @ space.omega.matrix @ v_mat
    scale = max(1.0, float(np.abs(v_mat).max()) ** 2)
    if np.linalg.matrix_rank(v_mat, tol=1e-10 * scale) < v_mat.shape[1]:
        raise NotSymplecticError("tangent vectors are linearly dependent")
    sv = np.linalg.svd(gram, compute_uv=False)
    if sv[-1] <= 1e-8 * scale:
        raise NotSymplecticError("tangent span is degenerate for the form")
    x = p.rep
    w0 = np.column_stack([v_mat, x, space.apply_a(x)])
    w_basis, _ = np.linalg.qr(w0)
    stab = np.abs((np.eye(space.dim_ambient) - w_basis @ w_basis.T) @ (space.generator.A @ w_basis))
    if stab.max() > max(tol, 1e3 * SUB_TOL) * max(1.0, float(np.abs(space.generator.A).max())):
        raise StabilityError(f"tangent span is not A-stable (residual {stab.max():.2e})")
    return GeodesicSubmanifold(space, w_basis, p, len(vectors) // 2)


def tangent_basis(s: GeodesicSubmanifold) -> np.ndarray:
    """Orthonormal basis of the horizontal part of W at the base point."""
    space = s.space
    x = s.base.rep
    hor_cols = np.column_stack(
        [horizontal_at(space, x, s.w_basis[:, i]) for i in range(s.w_basis.shape[1])]
    )
    u, sv, _ = np.linalg.svd(hor_cols)
    return u[:, : 2 * s.q]


def membership_residual(s: GeodesicSubmanifold, p: ModelPoint) -> float:
    """Distance of the canonical representative from W, relative to its size.

    The canonical representative of a point of S stays inside W exactly when
    W is A-stable, which makes this the confinement metric for geodesics.
    """
    xc, _ = s.space.canonicalize(p.rep)
    res = xc - s.projector @ xc
    return float(np.linalg.norm(res)) / max(1.0, float(np.linalg.norm(xc)))


def _span_residual_of_rep(s: GeodesicSubmanifold, x: np.ndarray) -> float:
    res = x - s.projector @ x
    return float(np.linalg.norm(res)) / max(1e-30, float(np.linalg.norm(x)))


def contains(s: GeodesicSubmanifold, p: ModelPoint, tol: float = 1e-6) -> bool:
    """True iff some orbit representative of p lies in span(W).

    The orbit of the canonical representative is swept: the compact circle
    is discretized for the elliptic case, a bracketed sweep with golden
    refinement is used for the noncompact flows.
    """
    if not same_space(s.space, p.space):
        raise DimensionError("point and submanifold live on different spaces")
    space = s.space
    xc, _ = space.canonicalize(p.rep)

    def resid(t: float) -> float:
        return _span_residual_of_rep(s, space.exp_ta(t) @ xc)

    if space.case == "elliptic":
        ts = np.linspace(0.0, 2 * np.pi / space.klass.k, 1000, endpoint=False)
    else:
        ts = np.linspace(-12.0, 12.0, 481)
    values = [resid(t) for t in ts]
    best = int(np.argmin(values))
    lo = ts[max(0, best - 1)]
    hi = ts[min(len(ts) - 1, best + 1)]
    # golden-section refinement of the best bracket
    phi = (np.sqrt(5.0) - 1) / 2
    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = resid(c), resid(d)
    for _ in range(60):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = resid(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = resid(d)
    return min(values[best], fc, fd) <= tol


def geodesic_confinement_residual(
    s: GeodesicSubmanifold,
    direction: HorizontalVector,
    t_max: float = 5.0,
    step: float = 2e-3,
    n_checks: int = 25,
) -> float:
    """Max canonical-representative distance from W along a geodesic."""
    space = s.space
    check_every = max(1, int(np.ceil(abs(t_max) / step / n_checks)))
    worst = 0.0
    for idx, (_, x, _) in enumerate(geodesic_steps(space, s.base.rep, direction.vec, t_max, step)):
        if idx % check_every:
            continue
        xc, _ = space.canonicalize(x)
        worst = max(worst, _span_residual_of_rep(s, xc))
    return worst


def span_confinement_residual(
    space: ModelSpace,
    w_matrix: np.ndarray,
    x0: np.ndarray,
    v0: np.ndarray,
    t_max: float = 5.0,
    step: float = 2e-3,
    n_checks: int = 25,
) -> float:
    """Confinement metric against an arbitrary subspace (negative controls)."""
    w_basis, _ = np.linalg.qr(w_matrix)
    proj = w_basis @ w_basis.T
    check_every = max(1, int(np.ceil(abs(t_max) / step / n_checks)))
    worst = 0.0
    for idx, (_, x, _) in enumerate(geodesic_steps(space, x0, v0, t_max, step)):
        if idx % check_every:
            continue
        xc, _ = space.canonicalize(x)
        res = xc - proj @ xc
        worst = max(worst, float(np.linalg.norm(res)) / max(1e-30, float(np.linalg.norm(xc))))
    return worst


def induced_embedding(
    s: GeodesicSubmanifold,
) -> tuple[ModelSpace, np.ndarray, np.ndarray]:
    """The induced model of S with its embedding data.

    Returns (space_S, M, y0): M maps normal-form coordinates of the induced
    space to ambient vectors, and y0 is the base point in those coordinates.
    """
    space = s.space
    d_cols = darboux_basis(s.w_basis, space.omega.matrix)
    a_sub, *_ = np.linalg.lstsq(d_cols, space.generator.A @ d_cols, rcond=None)
    om_sub = standard_form(s.q)
    gen_sub = make_generator(om_sub, a_sub, tol=1e-6)
    from .ambient import adapted_basis

    adapted = adapted_basis(om_sub, gen_sub, tol=1e-6)
    embed = d_cols @ adapted.T
    y0, *_ = np.linalg.lstsq(embed, s.base.rep, rcond=None)
    klass_sub = adapted.klass
    cc = 1
    if klass_sub.case == "nilpotent" and klass_sub.p == 1:
        cc = 1 if y0[klass_sub.r] > 0 else -1
    sub_space = model_space(klass_sub, s.q, cc_sign=cc)
    return sub_space, embed, y0


def induced_model(s: GeodesicSubmanifold) -> ModelSpace:
    """The model space structure of (W, Omega|_W, A|_W)."""
    return induced_embedding(s)[0]


def orbit_invariants(s: GeodesicSubmanifold) -> OrbitInvariants:
    """The case integers identifying the group orbit of S."""
    space = s.space
    w = s.w_basis
    beta = w.T @ (space.omega.matrix @ space.generator.A) @ w
    if space.case == "hyperbolic":
        return OrbitInvariants(s.q)
    if space.case == "elliptic":
        pos, neg, _ = symmetric_signature(beta, 1e-8)
        return OrbitInvariants(s.q, p_prime=pos // 2 - 1)
    a_sub, *_ = np.linalg.lstsq(w, space.generator.A @ w, rcond=None)
    r_prime = int(np.linalg.matrix_rank(a_sub, tol=1e-8))
    pos, neg, _ = symmetric_signature(beta, 1e-8)
    return OrbitInvariants(s.q, p_prime=pos, r_prime=r_prime)


def act_on_submanifold(b: GroupElement, s: GeodesicSubmanifold) -> GeodesicSubmanifold:
    """Transport S by a group element."""
    w_new, _ = np.linalg.qr(b.B @ s.w_basis)
    return GeodesicSubmanifold(s.space, w_new, act(b, s.base), s.q)


def validate_invariants(space: ModelSpace, inv: OrbitInvariants):
    """Check that requested orbit invariants are legal for the space."""
    n, q = space.n, inv.q
    if not 0 <= q <= n:
        raise SamplerError(f"q = {q} outside [0, {n}]")
    if space.case == "hyperbolic":
        return
    if space.case == "elliptic":
        p = space.klass.p
        pp = inv.p_prime if inv.p_prime is not None else min(p, q)
        if not (0 <= pp <= min(p, q) and q - pp <= n - p):
            raise SamplerError(f"p' = {pp} illegal for (n, p, q) = ({n}, {p}, {q})")
        if 0 < p < n and pp == min(p, q):
            warnings.warn(
                "requested p' sits on the ambiguous boundary p' = min(p, q)",
                stacklevel=2,
            )
        return
    r, p, m = space.klass.r, space.klass.p, space.klass.m
    rp = inv.r_prime if inv.r_prime is not None else min(r, q + 1)
    pp = inv.p_prime if inv.p_prime is not None else 1
    mp = q - rp + 1
    if not (1 <= rp <= r and 1 <= pp <= min(rp, p) and rp - pp <= r - p and 0 <= mp <= m):
        raise SamplerError(
            f"(r', p') = ({rp}, {pp}) illegal for (r, p, m, q) = ({r}, {p}, {m}, {q})"
        )


def reference_submanifold(space: ModelSpace, inv: OrbitInvariants) -> GeodesicSubmanifold:
    """The coordinate-subspace representative of an orbit class."""
    validate_invariants(space, inv)
    n, q = space.n, inv.q
    d = space.dim_ambient
    eye = np.eye(d)
    if space.case == "hyperbolic":
        idx = list(range(q + 1)) + [n + 1 + i for i in range(q + 1)]
    elif space.case == "elliptic":
        p = space.klass.p
        pp = inv.p_prime if inv.p_prime is not None else min(p, q)
        cplx = list(range(pp + 1)) + [p + 1 + i for i in range(q - pp)]
        idx = cplx + [n + 1 + a for a in cplx]
    else:
        r = space.klass.r
        p = space.klass.p
        m = space.klass.m
        rp = inv.r_prime if inv.r_prime is not None else min(r, q + 1)
        pp = inv.p_prime if inv.p_prime is not None else 1
        mp = q - rp + 1
        a_idx = list(range(pp)) + [p + i for i in range(rp - pp)]
        v_idx = [r + i for i in a_idx]
        w_idx = [2 * r + i for i in range(mp)] + [2 * r + m + i for i in range(mp)]
        idx = a_idx + v_idx + w_idx
    w_basis = eye[:, idx]
    base = space.reference_point()
    sub = GeodesicSubmanifold(space, w_basis, base, q)
    if membership_residual(sub, base) > 1e-9:
        raise SamplerError("reference base point does not lie on the reference W")
    return sub


def random_submanifold(
    space: ModelSpace, inv: OrbitInvariants, rng: np.random.Generator
) -> GeodesicSubmanifold:
    """A random submanifold in the orbit of the reference with these invariants.

    Haar-uniform when the group is compact (elliptic p = n), otherwise the
    pushforward of the Gaussian exponential sampler.
    """
    ref = reference_submanifold(space, inv)
    if space.case == "elliptic" and space.klass.p == space.n:
        b = haar_group_element(space, rng)
    else:
        b = random_group_element(space, rng)
    return act_on_submanifold(b, ref)


def random_stable_tangent(
    space: ModelSpace,
    p: ModelPoint,
    q: int,
    rng: np.random.Generator,
    max_tries: int = 200,
) -> list[HorizontalVector]:
    """Random A-stable symplectic tangent data of dimension 2q at p.

    Pairs {c, Ac} are adjoined (Ac is automatically horizontal), falling
    back to kernel pairs in the nilpotent case; each new pair is
    symplectically projected off the span collected so far, which preserves
    A-stability.
    """
    x = p.rep
    om = space.omega.matrix
    cols: list[np.ndarray] = []

    def sympl_project(w: np.ndarray) -> np.ndarray:
        if not cols:
            return w
        v_mat = np.column_stack(cols)
        gram = v_mat.T @ om @ v_mat
        rhs = v_mat.T @ om @ w
        coeff = np.linalg.solve(gram, rhs)
        return w - v_mat @ coeff

    tries = 0
    while len(cols) < 2 * q and tries < max_tries:
        tries += 1
        c = sympl_project(horizontal_at(space, x, rng.standard_normal(space.dim_ambient)))
        if np.linalg.norm(c) < 1e-8:
            continue
        c = c / np.linalg.norm(c)
        d_vec = space.apply_a(c)
        pairing = space.pair(c, d_vec)
        if abs(pairing) > 1e-3:
            cols.extend([c, d_vec / pairing])
            continue
        if space.case == "nilpotent":
            # kernel pair: two horizontal kernel vectors with a usable pairing
            r = space.klass.r
            k1 = np.zeros(space.dim_ambient)
            k2 = np.zeros(space.dim_ambient)
            k1[: r] = rng.standard_normal(r)
            k1[2 * r :] = rng.standard_normal(space.dim_ambient - 2 * r)
            k2[: r] = rng.standard_normal(r)
            k2[2 * r :] = rng.standard_normal(space.dim_ambient - 2 * r)
            k1 = sympl_project(horizontal_at(space, x, k1))
            k2 = sympl_project(horizontal_at(space, x, k2))
            pairing = space.pair(k1, k2)
            if abs(pairing) > 1e-3 and np.linalg.norm(k1) > 1e-6:
                cols.extend([k1, k2 / pairing])
    if len(cols) < 2 * q:
        raise SamplerError("could not sample a stable symplectic tangent subspace")
    return [HorizontalVector(p, c) for c in cols]


def unstable_tangents_exist(space: ModelSpace) -> bool:
    """Whether non-stable tangent subspaces exist at all.

    For a rank-one nilpotent generator the image of A is the line through
    Ax, which every candidate W contains, so all subspaces are stable and
    the Ricci endomorphism vanishes identically.
    """
    return not (space.case == "nilpotent" and space.klass.r == 1)


def random_unstable_tangent(
    space: ModelSpace,
    p: ModelPoint,
    q: int,
    rng: np.random.Generator,
    max_tries: int = 200,
) -> list[HorizontalVector]:
    """Random symplectic tangent data that is NOT A-stable (negative control)."""
    if not unstable_tangents_exist(space):
        raise SamplerError("every tangent subspace is stable when rank(A) = 1")
    x = p.rep
    a_scale = max(1.0, float(np.abs(space.generator.A).max()))
    for _ in range(max_tries):
        cols = [
            horizontal_at(space, x, rng.standard_normal(space.dim_ambient))
            for _ in range(2 * q)
        ]
        v_mat = np.column_stack(cols)
        gram = v_mat.T @ space.omega.matrix @ v_mat
        if np.linalg.svd(gram, compute_uv=False)[-1] < 1e-3:
            continue
        w0 = np.column_stack([v_mat, x, space.apply_a(x)])
        w_b, _ = np.linalg.qr(w0)
        stab = np.abs(
            (np.eye(space.dim_ambient) - w_b @ w_b.T) @ (space.generator.A @ w_b)
        ).max()
        if stab > 0.05 * a_scale:
            return [HorizontalVector(p, c) for c in cols]
    raise SamplerError("could not sample an unstable tangent subspace")
