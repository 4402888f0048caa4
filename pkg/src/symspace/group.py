"""Automorphism groups of the models and their moment maps.

The symmetry group consists of symplectic matrices commuting with the
generator; its Lie algebra is obtained by null-space extraction from the
linear conditions.  Moment maps are evaluated on representatives, with the
case-specific traceless-matrix forms for the hyperbolic and elliptic cases
and the block form for the nilpotent case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, null_space

from .errors import DimensionError, NotSymplecticError, SamplerError
from .model import (
    HorizontalVector,
    ModelPoint,
    ModelSpace,
    TangentFrame,
    canonical_rep,
    horizontal_project,
    rep_distance,
    same_space,
)

GROUP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class GroupElement:
    """A symplectic matrix commuting with the generator."""

    space: ModelSpace
    B: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.B, dtype=float).copy()
        validate_group_matrix(self.space, b)
        b.flags.writeable = False
        object.__setattr__(self, "B", b)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """An element of the Lie algebra: D in sp(Omega) with DA = AD."""

    space: ModelSpace
    D: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.D, dtype=float).copy()
        validate_algebra_matrix(self.space, d)
        d.flags.writeable = False
        object.__setattr__(self, "D", d)


def validate_group_matrix(space: ModelSpace, b: np.ndarray, tol: float = GROUP_TOL):
    om, a = space.omega.matrix, space.generator.A
    scale = max(1.0, float(np.abs(b).max()) ** 2)
    if np.abs(b.T @ om @ b - om).max() > tol * scale:
        raise NotSymplecticError("matrix does not preserve the form")
    if np.abs(b @ a - a @ b).max() > tol * scale:
        raise NotSymplecticError("matrix does not commute with the generator")


def validate_algebra_matrix(space: ModelSpace, d: np.ndarray, tol: float = GROUP_TOL):
    om, a = space.omega.matrix, space.generator.A
    scale = max(1.0, float(np.abs(d).max()))
    if np.abs(d.T @ om + om @ d).max() > tol * scale:
        raise NotSymplecticError("matrix is not in sp(Omega)")
    if np.abs(d @ a - a @ d).max() > tol * scale:
        raise NotSymplecticError("matrix does not commute with the generator")


def algebra_basis(space: ModelSpace) -> np.ndarray:
    """Orthonormal basis of the Lie algebra, shape (count, d, d).

    Solves {D^T Omega + Omega D = 0, DA - AD = 0} on vec(D) by null-space
    extraction.
    """
    om, a = space.omega.matrix, space.generator.A
    d = space.dim_ambient
    eye = np.eye(d)
    # row-major vec: vec(M X N) = kron(M, N^T) vec(X), vec(X^T) = K vec(X)
    perm = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            perm[j * d + i, i * d + j] = 1.0
    k_sym = np.kron(eye, om.T) @ perm + np.kron(om, eye)
    k_comm = np.kron(eye, a.T) - np.kron(a, eye)
    constraints = np.vstack([k_sym, k_comm])
    basis = null_space(constraints)
    return np.array([basis[:, i].reshape(d, d) for i in range(basis.shape[1])])


def random_algebra_element(
    space: ModelSpace, rng: np.random.Generator, scale: float = 1.0
) -> AlgebraElement:
    basis = algebra_basis(space)
    coeff = rng.standard_normal(len(basis)) * scale
    return AlgebraElement(space, np.einsum("i,ijk->jk", coeff, basis))


def random_group_element(
    space: ModelSpace, rng: np.random.Generator, scale: float = 0.4
) -> GroupElement:
    """exp(D) for D drawn from a fixed Gaussian on the algebra basis."""
    d_elt = random_algebra_element(space, rng, scale)
    return GroupElement(space, expm(d_elt.D))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed U(dim) matrix from QR of a Ginibre sample."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r).copy()
    ph = ph / np.abs(ph)
    return q * ph


def haar_special_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    u = haar_unitary(dim, rng)
    det = np.linalg.det(u)
    return u * det ** (-1.0 / dim)


def complex_to_real_matrix(space: ModelSpace, c: np.ndarray) -> np.ndarray:
    """Real matrix of a complex-linear map in the elliptic coordinates.

    Coordinates are z_a = u_a + i s_a v_a with the signature signs s.
    """
    s = space._signs()
    x, y = c.real, c.imag
    upper = np.hstack([x, -y * s[None, :]])
    lower = np.hstack([(s[:, None] * y), s[:, None] * x * s[None, :]])
    return np.vstack([upper, lower])


def haar_group_element(space: ModelSpace, rng: np.random.Generator) -> GroupElement:
    """Haar-uniform element of the compact group (elliptic, p = n only)."""
    if space.case != "elliptic" or space.klass.p != space.n:
        raise SamplerError("Haar sampling needs the compact elliptic case p = n")
    u = haar_special_unitary(space.n + 1, rng)
    return GroupElement(space, complex_to_real_matrix(space, u))


def act(b: GroupElement, p: ModelPoint) -> ModelPoint:
    """The induced action on the quotient: B . pi(x) = pi(Bx)."""
    if not same_space(b.space, p.space):
        raise DimensionError("group element and point live on different spaces")
    return canonical_rep(p.space, b.B @ p.rep)


def fundamental_field(d_elt: AlgebraElement, p: ModelPoint) -> HorizontalVector:
    """The fundamental vector field of D at p (flow of exp(-tD))."""
    if not same_space(d_elt.space, p.space):
        raise DimensionError("algebra element and point live on different spaces")
    return horizontal_project(p, -d_elt.D @ p.rep)


def moment(p: ModelPoint, d_elt: AlgebraElement) -> float:
    """The Hamiltonian of D: half the pairing Omega(x, Dx)."""
    return 0.5 * p.space.pair(p.rep, d_elt.D @ p.rep)


def equivariance_defect(b: GroupElement, d_elt: AlgebraElement, p: ModelPoint) -> float:
    """|moment(B p, D) - moment(p, B^-1 D B)| (coadjoint equivariance)."""
    moved = moment(act(b, p), d_elt)
    pulled = AlgebraElement(b.space, np.linalg.solve(b.B, d_elt.D @ b.B))
    return abs(moved - moment(p, pulled))


def hamiltonian_residual(
    space: ModelSpace, p: ModelPoint, d_elt: AlgebraElement, h: float = 1e-4
) -> float:
    """Residual of iota(D*) omega_red = d f_D in chart coordinates."""
    frame = TangentFrame(space, p)
    dim = space.dim
    xi0 = np.zeros(dim)

    def f_at(xi):
        x = frame.rep_at(xi)
        return 0.5 * space.pair(x, d_elt.D @ x)

    df = np.empty(dim)
    for j in range(dim):
        e_j = np.zeros(dim)
        e_j[j] = 1.0
        coarse = (f_at(xi0 + h * e_j) - f_at(xi0 - h * e_j)) / (2 * h)
        fine = (f_at(xi0 + 0.5 * h * e_j) - f_at(xi0 - 0.5 * h * e_j)) / h
        df[j] = (4 * fine - coarse) / 3.0
    field_lift = fundamental_field(d_elt, p).vec
    field = frame.components(xi0, field_lift[:, None])[:, 0]
    contraction = frame.omega_frame(xi0).T @ field
    # omega(D*, e_j) = sum_k field_k omega_frame[k, j]
    return float(np.abs(contraction - df).max())


# case moment maps -------------------------------------------------------


def sl_moment(p: ModelPoint) -> np.ndarray:
    """Traceless matrix moment for the hyperbolic case."""
    space = p.space
    if space.case != "hyperbolic":
        raise DimensionError("sl_moment needs the hyperbolic case")
    u, v = space._uv(p.rep)
    n1 = space.n + 1
    return (-np.outer(u, v) + (float(u @ v) / n1) * np.eye(n1)) / (2.0 * n1)


def su_moment(p: ModelPoint) -> np.ndarray:
    """Traceless anti-Hermitian moment for the elliptic case."""
    space = p.space
    if space.case != "elliptic":
        raise DimensionError("su_moment needs the elliptic case")
    z = space.to_complex(p.rep)
    s = space._signs()
    herm_zz = float(np.sum(s * np.abs(z) ** 2))
    mat = np.outer(z, s * np.conj(z))
    n1 = space.n + 1
    return -0.5j * mat + (0.5j * herm_zz / n1) * np.eye(n1)


def sl_pairing(m1: np.ndarray, m2: np.ndarray) -> float:
    """Killing-form pairing on sl(n+1, R)."""
    n1 = m1.shape[0]
    return 2.0 * n1 * float(np.trace(m1 @ m2))


def hyperbolic_block_element(space: ModelSpace, c: np.ndarray) -> AlgebraElement:
    """The algebra element diag(c, -c^T) of the hyperbolic case."""
    n1 = space.n + 1
    d = np.zeros((2 * n1, 2 * n1))
    d[:n1, :n1] = c
    d[n1:, n1:] = -c.T
    return AlgebraElement(space, d)


def unitary_algebra_element(space: ModelSpace, c: np.ndarray) -> AlgebraElement:
    """The algebra element of a pseudo-anti-Hermitian complex matrix."""
    return AlgebraElement(space, complex_to_real_matrix(space, c))


def case3_algebra_element(
    space: ModelSpace, b: np.ndarray, c: np.ndarray, u: np.ndarray, s: np.ndarray
) -> AlgebraElement:
    """Embed (b, c, u, s) into the nilpotent-case Lie algebra.

    b is g-antisymmetric (r x r), c in sp(2m), u is r x 2m, s symmetric.
    """
    if space.case != "nilpotent":
        raise DimensionError("case3 elements need the nilpotent case")
    r, m = space.klass.r, space.klass.m
    gm = np.diag(space._gmetric())
    om_w = space.omega.matrix[2 * r :, 2 * r :]
    d = np.zeros((space.dim_ambient, space.dim_ambient))
    d[:r, :r] = b
    d[r : 2 * r, r : 2 * r] = b
    d[:r, r : 2 * r] = gm @ s
    if m > 0:
        d[:r, 2 * r :] = u @ om_w
        d[2 * r :, r : 2 * r] = -u.T @ gm
        d[2 * r :, 2 * r :] = c
    return AlgebraElement(space, d)


def case3_moment(
    p: ModelPoint, b: np.ndarray, c: np.ndarray, u: np.ndarray, s: np.ndarray
) -> float:
    """Block moment -g(x, bv) + s(v,v)/2 + g(v, u Omega' w) + Omega(w, cw)/2."""
    space = p.space
    if space.case != "nilpotent":
        raise DimensionError("case3_moment needs the nilpotent case")
    r = space.klass.r
    a_blk, v, w = space._blocks(p.rep)
    gm = space._gmetric()
    om_w = space.omega.matrix[2 * r :, 2 * r :]
    val = -float(a_blk @ (gm * (b @ v))) + 0.5 * float(v @ (s @ v))
    if space.klass.m > 0:
        val += float(v @ (gm * (u @ (om_w @ w)))) + 0.5 * float(w @ (om_w @ (c @ w)))
    return val


# constructive transitivity ----------------------------------------------


def _complete_pseudo_unitary(space: ModelSpace, z: np.ndarray) -> np.ndarray:
    """Columns forming a pseudo-orthonormal basis starting from z (sign +1)."""
    s = space._signs()
    n1 = space.n + 1
    cols = [z / np.sqrt(float(np.sum(s * np.abs(z) ** 2)))]
    signs = [1.0]
    for cand in np.eye(n1, dtype=complex).T:
        if len(cols) == n1:
            break
        v = cand.copy()
        for col, sg in zip(cols, signs):
            v = v - sg * np.sum(s * v * np.conj(col)) * col
        norm = float(np.sum(s * np.abs(v) ** 2).real)
        if abs(norm) < 1e-10:
            continue
        cols.append(v / np.sqrt(abs(norm)))
        signs.append(1.0 if norm > 0 else -1.0)
    if len(cols) < n1:
        raise SamplerError("pseudo-unitary completion failed")
    order = np.argsort([-sg for sg in signs], kind="stable")
    cols = [cols[i] for i in order]
    if [signs[i] for i in order] != list(s):
        raise SamplerError("completion signature does not match the space")
    return np.column_stack(cols)


def _complete_pseudo_orthogonal(gm: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Real pseudo-orthonormal frame with first column v (g(v,v) = 1)."""
    r = len(v)
    cols = [v / np.sqrt(float(v @ (gm * v)))]
    signs = [1.0]
    for cand in np.eye(r).T:
        if len(cols) == r:
            break
        w = cand.copy()
        for col, sg in zip(cols, signs):
            w = w - sg * float(w @ (gm * col)) * col
        norm = float(w @ (gm * w))
        if abs(norm) < 1e-10:
            continue
        cols.append(w / np.sqrt(abs(norm)))
        signs.append(1.0 if norm > 0 else -1.0)
    if len(cols) < r:
        raise SamplerError("pseudo-orthogonal completion failed")
    pos = [c for c, sg in zip(cols, signs) if sg > 0]
    neg = [c for c, sg in zip(cols, signs) if sg < 0]
    return np.column_stack(pos + neg)


def transitive_element(space: ModelSpace, p: ModelPoint, q: ModelPoint) -> GroupElement:
    """Construct a group element with act(B, p) equal to q.

    Explicit frame-to-frame constructions per case; the residual is checked
    and a SamplerError raised on failure.
    """
    x1, _ = space.canonicalize(p.rep)
    x2, _ = space.canonicalize(q.rep)
    n1 = space.n + 1

    if space.case == "hyperbolic":
        u1, v1 = space._uv(x1)
        u2, v2 = space._uv(x2)
        f1 = np.column_stack([u1] + list(null_space(v1[None, :]).T))
        f2 = np.column_stack([u2] + list(null_space(v2[None, :]).T))
        c = f2 @ np.linalg.inv(f1)
        if np.linalg.det(c) < 0:
            f2[:, 1] = -f2[:, 1]
            c = f2 @ np.linalg.inv(f1)
        b = np.zeros((2 * n1, 2 * n1))
        b[:n1, :n1] = c
        b[n1:, n1:] = np.linalg.inv(c).T
    elif space.case == "elliptic":
        z1, z2 = space.to_complex(x1), space.to_complex(x2)
        u1 = _complete_pseudo_unitary(space, z1)
        u2 = _complete_pseudo_unitary(space, z2)
        b = complex_to_real_matrix(space, u2 @ np.linalg.inv(u1))
    else:
        r, m = space.klass.r, space.klass.m
        gm = space._gmetric()
        gmat = np.diag(gm)
        a1, v1, w1 = space._blocks(x1)
        a2, v2, w2 = space._blocks(x2)
        f1 = _complete_pseudo_orthogonal(gm, v1)
        f2 = _complete_pseudo_orthogonal(gm, v2)
        b_so = f2 @ np.linalg.inv(f1)
        if np.linalg.det(b_so) < 0 and r > 1:
            f2[:, -1] = -f2[:, -1]
            b_so = f2 @ np.linalg.inv(f1)
        d = space.dim_ambient
        t_b = np.eye(d)
        t_b[:r, :r] = b_so
        t_b[r : 2 * r, r : 2 * r] = b_so
        mid = t_b @ x1
        a_m, v_m, w_m = space._blocks(mid)
        t_u = np.eye(d)
        if m > 0:
            om_w = space.omega.matrix[2 * r :, 2 * r :]
            u_mat = np.outer(v_m, w_m - w2)  # r x 2m, maps w_m to w2 along v_m
            t_mat = 0.5 * gmat @ u_mat @ om_w @ u_mat.T @ gmat
            t_u[:r, r : 2 * r] = gmat @ t_mat
            t_u[:r, 2 * r :] = u_mat @ om_w
            t_u[2 * r :, r : 2 * r] = -u_mat.T @ gmat
        mid2 = t_u @ mid
        a_m2, v_m2, _ = space._blocks(mid2)
        diff = gmat @ (a2 - a_m2)
        denom = float(v_m2 @ v_m2)
        s_mat = (np.outer(diff, v_m2) + np.outer(v_m2, diff)) / denom - (
            float(diff @ v_m2) / denom**2
        ) * np.outer(v_m2, v_m2)
        t_s = np.eye(d)
        t_s[:r, r : 2 * r] = gmat @ s_mat
        b = t_s @ t_u @ t_b

    elt = GroupElement(space, b)
    if rep_distance(act(elt, p), q) > 1e-6:
        raise SamplerError("transitivity solver failed to reach the target point")
    return elt
