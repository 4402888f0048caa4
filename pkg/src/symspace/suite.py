"""Property verification suites for a configured model space.

Each check reports a measured residual against its pinned tolerance; a
report collects them with the run metadata.  The connection can be
deliberately perturbed to exercise the negative controls.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import curvature as curv
from . import geodesic_sub as gsub
from . import group as grp
from .model import (
    CotangentQuadricChart,
    CotangentSphereChart,
    ModelSpace,
    TangentFrame,
    canonical_rep,
    from_chart,
    geodesic,
    horizontal_project,
    omega_red,
    points_equal,
    rep_distance,
    symmetry,
    to_chart,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    direction: str = "<="  # ">=" for negative controls and floors


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, name: str, value: float, tolerance: float, direction: str = "<="):
        ok = value <= tolerance if direction == "<=" else value >= tolerance
        self.checks.append(CheckResult(name, float(value), float(tolerance), bool(ok), direction))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "passed": self.passed,
            "checks": [
                {
                    "name": c.name,
                    "residual": c.value,
                    "tolerance": c.tolerance,
                    "direction": c.direction,
                    "passed": c.passed,
                }
                for c in self.checks
            ],
        }


def _chart_form_matrix(space: ModelSpace) -> np.ndarray:
    """Gram matrix of the canonical chart 2-form in chart coordinates."""
    d = space.dim_ambient
    m = np.zeros((d, d))
    if space.case == "hyperbolic":
        n1 = space.n + 1
        # sum dv~ ^ du~: omega(X, Y) = X_v . Y_u - X_u . Y_v
        m[:n1, n1:] = -np.eye(n1)
        m[n1:, :n1] = np.eye(n1)
        return m
    if space.case == "nilpotent":
        r, mm = space.klass.r, space.klass.m
        m[:r, r : 2 * r] = -np.eye(r)
        m[r : 2 * r, :r] = np.eye(r)
        if mm > 0:
            m[2 * r :, 2 * r :] = space.omega.matrix[2 * r :, 2 * r :]
        return m
    raise ValueError("chart form matrix applies to the cotangent charts")


def _chart_coords(space: ModelSpace, point) -> np.ndarray:
    chart = to_chart(point)
    if isinstance(chart, CotangentSphereChart):
        return np.concatenate([chart.u_tilde, chart.v_tilde])
    if isinstance(chart, CotangentQuadricChart):
        return np.concatenate([chart.v, chart.covector, chart.w])
    raise ValueError("projective charts have no ambient coordinate vector")


def chart_symplectic_residual(space: ModelSpace, p, h: float = 1e-4) -> float:
    """Pullback of the canonical chart form against the reduced form."""
    if space.case == "elliptic":
        return _fubini_study_residual(space, p, h)
    frame = TangentFrame(space, p)
    dim = space.dim
    xi0 = np.zeros(dim)

    def coords(xi):
        return _chart_coords(space, canonical_rep(space, frame.rep_at(xi)))

    jac = np.empty((space.dim_ambient, dim))
    for i in range(dim):
        e_i = np.zeros(dim)
        e_i[i] = 1.0
        coarse = (coords(xi0 + h * e_i) - coords(xi0 - h * e_i)) / (2 * h)
        fine = (coords(xi0 + 0.5 * h * e_i) - coords(xi0 - 0.5 * h * e_i)) / h
        jac[:, i] = (4 * fine - coarse) / 3.0
    pullback = jac.T @ _chart_form_matrix(space) @ jac
    return float(np.abs(pullback - frame.omega_frame(xi0)).max())


def _fubini_study_residual(space: ModelSpace, p, h: float = 1e-4) -> float:
    """Reduced form against the pairing of an explicit projective section."""
    k = space.klass.k
    s = space._signs()
    z0 = space.to_complex(p.rep)
    lead = int(np.argmax(np.abs(z0) >= 1e-9 * np.abs(z0).max()))
    others = [a for a in range(space.n + 1) if a != lead]

    def section(w_real: np.ndarray) -> np.ndarray:
        z = z0.astype(complex).copy()
        z[others] = z[others] + (w_real[: space.n] + 1j * w_real[space.n :])
        norm = float(np.sum(s * np.abs(z) ** 2).real)
        return space.from_complex(z / np.sqrt(k * norm))

    dim = space.dim
    w0 = np.zeros(dim)
    tangents = np.empty((space.dim_ambient, dim))
    for i in range(dim):
        e_i = np.zeros(dim)
        e_i[i] = 1.0
        tangents[:, i] = (section(w0 + h * e_i) - section(w0 - h * e_i)) / (2 * h)
    x_sec = section(w0)
    gram = tangents.T @ space.omega.matrix @ tangents
    point = canonical_rep(space, x_sec)
    lifts = [horizontal_project(point, tangents[:, i]) for i in range(dim)]
    gram_red = np.array(
        [[omega_red(point, a, b) for b in lifts] for a in lifts]
    )
    return float(np.abs(gram - gram_red).max())


def run_space_suite(
    space: ModelSpace,
    seed: int = 0,
    n_points: int = 5,
    perturb_connection: bool = False,
) -> VerificationReport:
    """The full property suite for one model space."""
    rng = np.random.default_rng(seed)
    rep = VerificationReport()
    rep.metadata = {
        "case": space.case,
        "class": space.klass.describe(),
        "n": space.n,
        "dim": space.dim,
        "seed": seed,
        "points": n_points,
        "perturb_connection": perturb_connection,
    }
    om, a = space.omega.matrix, space.generator.A

    rep.add("generator_in_sp", float(np.abs(a.T @ om + om @ a).max()), 1e-9)
    rep.add(
        "generator_squares_to_lambda",
        float(np.abs(a @ a - space.generator.lam * np.eye(space.dim_ambient)).max()),
        1e-9,
    )

    points = [space.random_point(rng) for _ in range(n_points)]
    rep.add(
        "level_set",
        max(abs(space.level(p.rep) - 1.0) for p in points),
        1e-10,
    )
    worst = 0.0
    for p in points:
        xc, _ = space.canonicalize(p.rep)
        xc2, _ = space.canonicalize(xc)
        worst = max(worst, float(np.abs(xc - xc2).max()) / max(1.0, float(np.abs(xc).max())))
    rep.add("canonical_rep_idempotent", worst, 1e-10)

    worst = 0.0
    for p in points:
        t = float(rng.uniform(-1.5, 1.5))
        q = canonical_rep(space, space.exp_ta(t) @ p.rep)
        worst = max(worst, rep_distance(p, q))
    rep.add("orbit_equality", worst, 1e-9)

    worst = 0.0
    for p in points:
        v = horizontal_project(p, rng.standard_normal(space.dim_ambient)).vec
        worst = max(
            worst,
            abs(space.pair(v, p.rep)),
            abs(space.pair(v, space.apply_a(p.rep))),
        )
    rep.add("horizontal_projection", worst, 1e-12)

    worst = 0.0
    det_floor = np.inf
    for p in points:
        frame = TangentFrame(space, p)
        om_f = frame.omega_frame(np.zeros(space.dim))
        det_floor = min(det_floor, abs(float(np.linalg.det(om_f))))
        x, y = (space.random_horizontal(p, rng) for _ in range(2))
        worst = max(worst, abs(omega_red(p, x, y) - space.pair(x.vec, y.vec)))
    rep.add("reduced_form_pullback", worst, 1e-12)
    rep.add("reduced_form_nondegenerate", det_floor, 1e-6, direction=">=")

    worst_inv = worst_triple = 0.0
    for _ in range(10):
        p, q, r = (space.random_point(rng) for _ in range(3))
        worst_inv = max(worst_inv, rep_distance(symmetry(p, symmetry(p, q)), q))
        lhs = symmetry(p, symmetry(q, symmetry(p, r)))
        rhs = symmetry(symmetry(p, q), r)
        worst_triple = max(worst_triple, rep_distance(lhs, rhs))
    rep.add("symmetry_involution", worst_inv, 1e-10)
    rep.add("symmetry_triple_axiom", worst_triple, 1e-8)

    p = points[0]
    x_vec = space.random_horizontal(p, rng)
    fwd, _ = geodesic(p, x_vec, 1.2, step=1e-3)
    bwd, _ = geodesic(p, x_vec, -1.2, step=1e-3)
    rep.add("geodesic_reversal", rep_distance(symmetry(p, fwd), bwd), 1e-6)

    from .model import geodesic_steps

    drift = 0.0
    for _, x, v in geodesic_steps(space, p.rep, x_vec.vec, 3.0, 1e-3):
        drift = max(
            drift,
            abs(space.level(x) - 1.0),
            abs(space.pair(v, x)),
            abs(space.pair(v, space.apply_a(x))),
        )
    rep.add("geodesic_constraint_drift", drift, 1e-6)

    perturbation = None
    if perturb_connection:
        perturbation = curv.random_symmetric_perturbation(TangentFrame(space, p), rng)

    anti = pair_sym = bianchi = ricci_sym = 0.0
    ricci_type = rho_sq = cross = 0.0
    k_hats = []
    for pt in points[: max(2, n_points // 2)]:
        if perturbation is None:
            sample = curv.curvature_at(space, pt)
        else:
            frame = TangentFrame(space, pt)
            gamma_fn = lambda xi: curv.christoffel(frame, xi, 1e-4) + perturbation
            r4 = curv.curvature_from_christoffel(gamma_fn, np.zeros(space.dim), 1e-3)
            om_f = frame.omega_frame(np.zeros(space.dim))
            r_om = np.einsum("ijkm,ml->ijkl", r4, om_f)
            ricci = np.einsum("ikjk->ij", r4)
            rho = np.linalg.solve(om_f, ricci)
            e_part = curv.e_part_contracted(om_f, ricci, space.dim)
            sample = curv.CurvatureSample(
                pt, frame.basis, om_f, r4, r_om, ricci, rho, e_part, r_om - e_part
            )
        scale = max(1.0, float(np.abs(sample.r_omega).max()))
        anti = max(anti, float(np.abs(sample.r_omega + sample.r_omega.transpose(1, 0, 2, 3)).max()) / scale)
        pair_sym = max(
            pair_sym,
            float(np.abs(sample.r_omega - sample.r_omega.transpose(0, 1, 3, 2)).max()) / scale,
        )
        b = (
            sample.r_omega
            + sample.r_omega.transpose(1, 2, 0, 3)
            + sample.r_omega.transpose(2, 0, 1, 3)
        )
        bianchi = max(bianchi, float(np.abs(b).max()) / scale)
        ricci_sym = max(ricci_sym, float(np.abs(sample.ricci - sample.ricci.T).max()) / scale)
        if sample.w_part is not None:
            ricci_type = max(ricci_type, float(np.abs(sample.w_part).max()) / scale)
        frame = TangentFrame(space, pt)
        rho_gen = curv.rho_components_from_generator(frame, np.zeros(space.dim))
        if perturbation is None:
            # the generator route carries no differencing noise
            k_hat_pt = float(np.trace(rho_gen @ rho_gen)) / space.dim
            rho_sq = max(
                rho_sq,
                float(np.abs(rho_gen @ rho_gen - k_hat_pt * np.eye(space.dim)).max()),
            )
            k_hats.append(k_hat_pt)
        else:
            rho_sq = max(
                rho_sq,
                float(np.abs(sample.rho @ sample.rho - sample.k_hat * np.eye(space.dim)).max()),
            )
            k_hats.append(sample.k_hat)
        cross = max(cross, float(np.abs(rho_gen - sample.rho).max()))
    rep.add("curvature_antisymmetry", anti, 1e-7)
    rep.add("curvature_pair_symmetry", pair_sym, 1e-7)
    rep.add("first_bianchi", bianchi, 1e-7)
    rep.add("ricci_symmetric", ricci_sym, 1e-7)
    if space.dim >= 4:
        rep.add("ricci_type_defect", ricci_type, 1e-6)
    rep.add("rho_squared_constant", rho_sq, 1e-6)
    lam = space.generator.lam
    k_hat = float(np.mean(k_hats))
    if abs(lam) < 1e-12:
        rep.add("k_hat_matches_lambda_sign", abs(k_hat), 1e-6)
    else:
        rep.add("k_hat_matches_lambda_sign", 0.0 if np.sign(k_hat) == np.sign(lam) else 1.0, 0.5)
    if perturbation is None:
        rep.add("rho_cross_method", cross, 1e-5)
        rep.add("torsion_free", curv.torsion_residual(space, p), 1e-6)
        rep.add("form_parallel", curv.nabla_omega_residual(space, p), 1e-6)
    rep.add(
        "local_symmetry",
        curv.local_symmetry_defect(space, p, perturbation=perturbation),
        1e-5,
    )

    if space.case == "elliptic" and space.klass.p == space.n and perturbation is None:
        frame = TangentFrame(space, p)
        sample = curv.curvature_at(space, p)
        j_comp = frame.components(
            np.zeros(space.dim), (space.generator.A / space.klass.k) @ frame.basis
        )
        k_hol = curv.holomorphic_constant_from_rho(sample.rho, j_comp, space.n)
        r_model = curv.kahler_curvature_contracted(sample.omega_frame, j_comp, k_hol)
        scale = max(1.0, float(np.abs(sample.r_omega).max()))
        rep.add(
            "kahler_cross_check",
            float(np.abs(r_model - sample.r_omega).max()) / scale,
            1e-5,
        )

    d_elt = grp.random_algebra_element(space, rng)
    b_elt = grp.random_group_element(space, rng)
    rep.add("moment_hamiltonian", grp.hamiltonian_residual(space, p, d_elt), 1e-5)
    rep.add("moment_equivariance", grp.equivariance_defect(b_elt, d_elt, p), 1e-9)
    t = float(rng.uniform(0.2, 1.0))
    shifted = canonical_rep(space, space.exp_ta(t) @ p.rep)
    rep.add(
        "moment_orbit_invariance",
        abs(grp.moment(p, d_elt) - grp.moment(shifted, d_elt)),
        1e-10,
    )

    worst = 0.0
    for pt in points[:3]:
        back = from_chart(space, to_chart(pt))
        worst = max(worst, rep_distance(pt, back))
    rep.add("chart_roundtrip", worst, 1e-10)
    rep.add("chart_symplectic", chart_symplectic_residual(space, p), 1e-5)

    if space.n >= 1:
        v_data = gsub.random_stable_tangent(space, p, 1, rng)
        sub = gsub.submanifold_from_tangent(p, v_data)
        unit = v_data[0].vec / np.linalg.norm(v_data[0].vec)
        res = gsub.geodesic_confinement_residual(
            sub, horizontal_project(p, unit), t_max=3.0, step=2e-3
        )
        rep.add("geodesic_confinement", res, 1e-6)
        if gsub.unstable_tangents_exist(space):
            v_bad = gsub.random_unstable_tangent(space, p, 1, rng)
            w0 = np.column_stack(
                [np.column_stack([v.vec for v in v_bad]), p.rep, space.apply_a(p.rep)]
            )
            unit_bad = v_bad[0].vec / np.linalg.norm(v_bad[0].vec)
            res_bad = gsub.span_confinement_residual(
                space, w0, p.rep, unit_bad, t_max=3.0, step=2e-3
            )
            rep.add("confinement_negative_control", res_bad, 1e-2, direction=">=")

    return rep
