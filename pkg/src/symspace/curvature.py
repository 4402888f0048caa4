"""Curvature of the reduced connection and its trace decomposition.

The connection is evaluated on the coordinate fields of a TangentFrame
chart.  Coordinate lifts are extended by ambient constancy plus horizontal
re-projection; differentiating them along the chart picks up a vertical
defect proportional to A (the lift of a quotient field is equivariant along
the fiber), which is corrected for explicitly.  Curvature is assembled from
second differences with Richardson extrapolation at two step sizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, SplitUndefinedError
from .model import (
    HorizontalVector,
    ModelPoint,
    ModelSpace,
    TangentFrame,
    horizontal_at,
)

DEFAULT_FD_STEP = 1e-4


def _central(fn: Callable[[float], np.ndarray], h: float, richardson: bool = True):
    """Central difference d/ds fn(s) at s = 0, optionally Richardson-extrapolated."""
    coarse = (fn(h) - fn(-h)) / (2 * h)
    if not richardson:
        return coarse
    fine = (fn(0.5 * h) - fn(-0.5 * h)) / h
    return (4.0 * fine - coarse) / 3.0


def christoffel(frame: TangentFrame, xi: np.ndarray, h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Connection coefficients Gamma[i, j, k] = (nabla_i dxi_j)^k at chart point xi.

    Uses the reduced-connection formula on the lifted coordinate fields, with
    the vertical defect of the chart tangents removed before differentiating.
    """
    space = frame.space
    dim = space.dim
    x = frame.rep_at(xi)
    ax = space.apply_a(x)
    lift0 = frame.lift(xi)
    tau = frame.vertical_defect(xi)
    om = space.omega.matrix
    a_lift = space.generator.A @ lift0

    m_pair = a_lift.T @ om @ lift0  # Omega(A L_i, L_j)
    om_frame = lift0.T @ om @ lift0

    cols = np.empty((space.dim_ambient, dim * dim))
    for i in range(dim):
        e_i = np.zeros(dim)
        e_i[i] = 1.0
        d_lift = _central(lambda s: frame.lift(xi + s * e_i), h)
        # derivative of the equivariant lift along the horizontal direction
        d_lift = d_lift - tau[i] * a_lift
        for j in range(dim):
            g = d_lift[:, j] - m_pair[i, j] * x + om_frame[i, j] * ax
            cols[:, i * dim + j] = horizontal_at(space, x, g)
    comps, *_ = np.linalg.lstsq(lift0, cols, rcond=None)
    return comps.T.reshape(dim, dim, comps.shape[0])


def curvature_from_christoffel(
    gamma_fn: Callable[[np.ndarray], np.ndarray],
    xi: np.ndarray,
    step: float,
) -> np.ndarray:
    """Coordinate curvature R4[i, j, l, k] of R(e_i, e_j) e_l from Gamma(xi).

    Coordinate fields commute, so no bracket term appears.
    """
    gamma0 = gamma_fn(xi)
    dim = gamma0.shape[0]
    d_gamma = np.empty((dim, dim, dim, dim))
    for i in range(dim):
        e_i = np.zeros(dim)
        e_i[i] = 1.0
        d_gamma[i] = _central(lambda s: gamma_fn(xi + s * e_i), step)
    # R^k_{lij} = d_i Gamma^k_{jl} - d_j Gamma^k_{il} + Gamma^k_{im} Gamma^m_{jl}
    #            - Gamma^k_{jm} Gamma^m_{il}
    r4 = np.empty((dim, dim, dim, dim))
    quad = np.einsum("imk,jlm->ijlk", gamma0, gamma0)
    for i in range(dim):
        for j in range(dim):
            r4[i, j] = d_gamma[i][j] - d_gamma[j][i] + quad[i, j] - quad[j, i]
    return r4


@dataclass(frozen=True, eq=False)
class CurvatureSample:
    """Curvature data at a point, in an orthonormal horizontal frame.

    r_omega holds omega(R(e_i, e_j) e_k, e_l); e_part / w_part are the same
    contraction of the trace and trace-free summands (None when dim < 4).
    """

    base: ModelPoint
    frame_basis: np.ndarray
    omega_frame: np.ndarray
    r4: np.ndarray
    r_omega: np.ndarray
    ricci: np.ndarray
    rho: np.ndarray
    e_part: Optional[np.ndarray]
    w_part: Optional[np.ndarray]

    @property
    def k_hat(self) -> float:
        """Least-squares multiple with rho^2 = k_hat * Id."""
        dim = self.rho.shape[0]
        return float(np.trace(self.rho @ self.rho)) / dim


def _contract_with_form(r4: np.ndarray, om_frame: np.ndarray) -> np.ndarray:
    # omega(R(e_i,e_j)e_k, e_l) = sum_m R4[i,j,k,m] omega[m,l]
    return np.einsum("ijkm,ml->ijkl", r4, om_frame)


def e_part_contracted(om_frame: np.ndarray, ricci: np.ndarray, dim_m: int) -> np.ndarray:
    """The Ricci-built summand, contracted against the form.

    Prefactor 1/(dim + 2); the contraction Tr[Z -> E(X,Z)Y] returns the
    Ricci tensor exactly with this normalization.
    """
    c = 1.0 / (dim_m + 2)
    om, r = om_frame, ricci
    term = (
        -2.0 * np.einsum("ij,kl->ijkl", om, r)
        - np.einsum("ik,jl->ijkl", om, r)
        + np.einsum("jk,il->ijkl", om, r)
        + np.einsum("ik,jl->ijkl", r, om)
        - np.einsum("jk,il->ijkl", r, om)
    )
    return c * term


def curvature_at(space: ModelSpace, p: ModelPoint, h: float = DEFAULT_FD_STEP) -> CurvatureSample:
    """Numerical curvature of the reduced connection at p.

    Inner differences (for the connection coefficients) run at scale h, the
    outer differences (for their derivatives) at 10 h; both are Richardson
    extrapolated.
    """
    if h <= 0:
        raise DimensionError("finite-difference scale must be positive")
    frame = TangentFrame(space, p)
    dim = space.dim
    xi0 = np.zeros(dim)
    gamma_fn = lambda xi: christoffel(frame, xi, h)
    r4 = curvature_from_christoffel(gamma_fn, xi0, 10.0 * h)
    om_frame = frame.omega_frame(xi0)
    r_omega = _contract_with_form(r4, om_frame)
    ricci = np.einsum("ikjk->ij", r4)
    rho = np.linalg.solve(om_frame, ricci)
    if dim >= 4:
        e_part = e_part_contracted(om_frame, ricci, dim)
        w_part = r_omega - e_part
    else:
        e_part = None
        w_part = None
    return CurvatureSample(p, frame.basis, om_frame, r4, r_omega, ricci, rho, e_part, w_part)


def vaisman_split(sample: CurvatureSample) -> tuple[np.ndarray, np.ndarray]:
    """The (E, W) decomposition of the curvature; needs dim >= 4."""
    if sample.e_part is None or sample.w_part is None:
        raise SplitUndefinedError("the trace decomposition needs dim M >= 4")
    return sample.e_part, sample.w_part


def ricci_from_generator(
    space: ModelSpace, p: ModelPoint, x_vec: HorizontalVector
) -> HorizontalVector:
    """The Ricci endomorphism applied to X, from the generator directly.

    The map induced by A on the horizontal space equals -rho/(2n+2).
    """
    x = p.rep
    ax = space.apply_a(x)
    a_xbar = space.apply_a(x_vec.vec)
    lift = a_xbar - space.pair(a_xbar, ax) * x
    return HorizontalVector(p, -(2 * space.n + 2) * lift)


def rho_components_from_generator(frame: TangentFrame, xi: np.ndarray) -> np.ndarray:
    """Chart components of the Ricci endomorphism at chart point xi."""
    space = frame.space
    x = frame.rep_at(xi)
    ax = space.apply_a(x)
    lift = frame.lift(xi)
    a_lift = space.generator.A @ lift
    coeff = a_lift.T @ (space.omega.matrix @ ax)
    rho_lift = -(2 * space.n + 2) * (a_lift - np.outer(x, coeff))
    return frame.components(xi, rho_lift)


def local_symmetry_defect(
    space: ModelSpace,
    p: ModelPoint,
    h: float = 1e-3,
    perturbation: Optional[np.ndarray] = None,
) -> float:
    """Norm of the covariant derivative of the Ricci endomorphism at p.

    Returns max |(nabla_i rho)^k_l| normalized by the size of rho.  With a
    perturbation S (components S[i, j, k], symmetric in i, j) the connection
    Gamma + S is used and rho is re-derived from its curvature, which is the
    negative control for the locally-symmetric property.
    """
    frame = TangentFrame(space, p)
    dim = space.dim
    xi0 = np.zeros(dim)
    if perturbation is None:
        gamma_fn = lambda xi: christoffel(frame, xi, 0.1 * h)
        rho_fn = lambda xi: rho_components_from_generator(frame, xi)
    else:
        gamma_fn = lambda xi: christoffel(frame, xi, 0.1 * h) + perturbation

        def rho_fn(xi, _cache={}):
            key = tuple(np.round(xi / (0.25 * h)).astype(int))
            if key not in _cache:
                r4 = curvature_from_christoffel(gamma_fn, xi, h)
                om_f = frame.omega_frame(xi)
                ricci = np.einsum("ikjk->ij", r4)
                _cache[key] = np.linalg.solve(om_f, ricci)
            return _cache[key]

    gamma0 = gamma_fn(xi0)
    rho0 = rho_fn(xi0)
    defect = 0.0
    for i in range(dim):
        e_i = np.zeros(dim)
        e_i[i] = 1.0
        d_rho = _central(lambda s: rho_fn(xi0 + s * e_i), h)
        # (nabla_i rho)^k_l = d_i rho^k_l + Gamma^k_{im} rho^m_l - Gamma^m_{il} rho^k_m
        nabla_i = d_rho + np.einsum("mk,ml->kl", gamma0[i], rho0) - np.einsum(
            "lm,km->kl", gamma0[i], rho0
        )
        defect = max(defect, float(np.abs(nabla_i).max()))
    return defect / max(1.0, float(np.abs(rho0).max()))


def torsion_residual(space: ModelSpace, p: ModelPoint, h: float = DEFAULT_FD_STEP) -> float:
    """Max asymmetry of the connection coefficients (coordinate fields commute)."""
    frame = TangentFrame(space, p)
    gamma0 = christoffel(frame, np.zeros(space.dim), h)
    return float(np.abs(gamma0 - gamma0.transpose(1, 0, 2)).max())


def nabla_omega_residual(space: ModelSpace, p: ModelPoint, h: float = DEFAULT_FD_STEP) -> float:
    """Finite-difference norm of the covariant derivative of the reduced form."""
    frame = TangentFrame(space, p)
    dim = space.dim
    xi0 = np.zeros(dim)
    gamma0 = christoffel(frame, xi0, h)
    worst = 0.0
    for i in range(dim):
        e_i = np.zeros(dim)
        e_i[i] = 1.0
        d_om = _central(lambda s: frame.omega_frame(xi0 + s * e_i), 10.0 * h)
        om0 = frame.omega_frame(xi0)
        # (nabla_i omega)_{jk} = d_i omega_{jk} - Gamma^m_{ij} omega_{mk}
        #                        - Gamma^m_{ik} omega_{jm}
        corr = np.einsum("jm,mk->jk", gamma0[i], om0) + np.einsum("km,jm->jk", gamma0[i], om0)
        worst = max(worst, float(np.abs(d_om - corr).max()))
    return worst


def random_symmetric_perturbation(
    frame: TangentFrame, rng: np.random.Generator, scale: float = 0.3
) -> np.ndarray:
    """A torsion-free connection perturbation with omega-symmetric components.

    Built from a fully symmetric 3-tensor T via omega(S(e_i, e_j), e_k) =
    T_{ijk}, so the perturbed connection stays torsion free and symplectic
    to leading order at the base point.
    """
    dim = frame.space.dim
    t = rng.standard_normal((dim, dim, dim))
    t = (
        t
        + t.transpose(0, 2, 1)
        + t.transpose(1, 0, 2)
        + t.transpose(1, 2, 0)
        + t.transpose(2, 0, 1)
        + t.transpose(2, 1, 0)
    ) / 6.0
    om0 = frame.omega_frame(np.zeros(dim))
    s = np.linalg.solve(om0.T, t.reshape(dim * dim, dim).T).T.reshape(dim, dim, dim)
    return scale * s


def kahler_curvature_contracted(
    om_frame: np.ndarray, j_comp: np.ndarray, k_hol: float
) -> np.ndarray:
    """Constant-holomorphic-curvature tensor, contracted against the form.

    R(X,Y)Z = (k/4)(-om(X,JZ)Y + om(Y,JZ)X - om(X,Z)JY + om(Y,Z)JX
                    - 2 om(X,Y)JZ).
    """
    om = om_frame
    om_j = om @ j_comp  # om(e_a, J e_b)
    dim = om.shape[0]
    eye = np.eye(dim)
    r4 = (
        -np.einsum("ik,jm->ijkm", om_j, eye)
        + np.einsum("jk,im->ijkm", om_j, eye)
        - np.einsum("ik,mj->ijkm", om, j_comp)
        + np.einsum("jk,mi->ijkm", om, j_comp)
        - 2.0 * np.einsum("ij,mk->ijkm", om, j_comp)
    ) * (k_hol / 4.0)
    return _contract_with_form(r4, om)


def holomorphic_constant_from_rho(rho: np.ndarray, j_comp: np.ndarray, n: int) -> float:
    """Identify k with rho = -(k (n+1) / 2) J by least squares."""
    num = float(np.sum(rho * j_comp))
    den = float(np.sum(j_comp * j_comp))
    return -2.0 * num / ((n + 1) * den)


def ricci_type_report(space: ModelSpace, p: ModelPoint, h: float = DEFAULT_FD_STEP) -> dict:
    """Structured curvature report for one point."""
    sample = curvature_at(space, p, h)
    scale = max(1.0, float(np.abs(sample.r_omega).max()))
    bianchi = (
        sample.r_omega
        + sample.r_omega.transpose(1, 2, 0, 3)
        + sample.r_omega.transpose(2, 0, 1, 3)
    )
    report = {
        "case": space.case,
        "n": space.n,
        "bianchi_residual": float(np.abs(bianchi).max()) / scale,
        "rho_squared_residual": float(
            np.abs(sample.rho @ sample.rho - sample.k_hat * np.eye(space.dim)).max()
        ),
        "k_hat": sample.k_hat,
    }
    if sample.w_part is not None:
        report["ricci_type_defect"] = float(np.abs(sample.w_part).max()) / scale
    else:
        report["ricci_type_defect"] = None
    return report


# symplectization of a torsion-free connection on a flat patch -----------


def symplectize(
    omega_fn: Callable[[np.ndarray], np.ndarray],
    gamma0_fn: Callable[[np.ndarray], np.ndarray],
    h: float = 1e-5,
    tol: float = 1e-8,
) -> Callable[[np.ndarray], np.ndarray]:
    """Project a torsion-free coordinate connection onto a symplectic one.

    With N defined by (nabla0_X omega)(Y, Z) = omega(N(X, Y), Z), the
    returned coefficients are Gamma0 + (N(X,Y) + N(Y,X)) / 3, which
    parallelizes omega and keeps the torsion zero.
    """

    def corrected(xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        dim = omega_fn(xi).shape[0]
        gamma0 = gamma0_fn(xi)
        if np.abs(gamma0 - gamma0.transpose(1, 0, 2)).max() > tol:
            raise DimensionError("input connection has torsion")
        om = omega_fn(xi)
        nabla = np.empty((dim, dim, dim))
        for i in range(dim):
            e_i = np.zeros(dim)
            e_i[i] = 1.0
            d_om = _central(lambda s: omega_fn(xi + s * e_i), h)
            nabla[i] = d_om - np.einsum("jm,mk->jk", gamma0[i], om) - np.einsum(
                "km,jm->jk", gamma0[i], om
            )
        n_comp = np.linalg.solve(om.T, nabla.reshape(dim * dim, dim).T).T.reshape(
            dim, dim, dim
        )
        return gamma0 + (n_comp + n_comp.transpose(1, 0, 2)) / 3.0

    return corrected


def form_parallelism_residual(
    omega_fn: Callable[[np.ndarray], np.ndarray],
    gamma_fn: Callable[[np.ndarray], np.ndarray],
    xi: np.ndarray,
    h: float = 1e-5,
) -> float:
    """Max norm of nabla omega for a coordinate connection on a flat patch."""
    xi = np.asarray(xi, dtype=float)
    om = omega_fn(xi)
    dim = om.shape[0]
    gamma = gamma_fn(xi)
    worst = 0.0
    for i in range(dim):
        e_i = np.zeros(dim)
        e_i[i] = 1.0
        d_om = _central(lambda s: omega_fn(xi + s * e_i), h)
        res = d_om - np.einsum("jm,mk->jk", gamma[i], om) - np.einsum(
            "km,jm->jk", gamma[i], om
        )
        worst = max(worst, float(np.abs(res).max()))
    return worst
