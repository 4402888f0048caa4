"""Symplectic linear algebra on R^(2n+2).

Provides the standard symplectic form, membership tests for the symplectic
group and its Lie algebra, and the classification of generators A with
A^2 = lambda*Id into the hyperbolic / elliptic / nilpotent cases together
with adapted (normal-form) bases.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import null_space

from .errors import (
    ConditioningError,
    DimensionError,
    NotASpaceFormError,
    NotSymplecticError,
)

DEFAULT_TOL = 1e-9


def _as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True, eq=False)
class SymplecticForm:
    """A nondegenerate antisymmetric bilinear form given by its Gram matrix."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = _as_matrix(self.matrix)
        if m.shape[0] != self.dim:
            raise DimensionError("matrix shape does not match dim")
        if self.dim % 2 != 0:
            raise DimensionError("symplectic dimension must be even")
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m + m.T).max() > 1e-12 * scale:
            raise NotSymplecticError("form matrix is not antisymmetric")
        if np.linalg.matrix_rank(m) < self.dim:
            raise NotSymplecticError("form matrix is degenerate")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def pair(self, x: np.ndarray, y: np.ndarray) -> float:
        """Evaluate Omega(x, y)."""
        return float(x @ self.matrix @ y)


def standard_form(n: int) -> SymplecticForm:
    """The standard form [[0, Id], [-Id, 0]] on R^(2n+2)."""
    if int(n) != n or n < 1:
        raise DimensionError(f"n must be an integer >= 1, got {n!r}")
    n = int(n)
    d = n + 1
    m = np.zeros((2 * d, 2 * d))
    m[:d, d:] = np.eye(d)
    m[d:, :d] = -np.eye(d)
    return SymplecticForm(2 * d, m)


def standard_form_dim(dim: int) -> SymplecticForm:
    """Standard form of a given even dimension (dim = 2m)."""
    if dim % 2 != 0 or dim < 2:
        raise DimensionError(f"dimension must be even and >= 2, got {dim}")
    half = dim // 2
    m = np.zeros((dim, dim))
    m[:half, half:] = np.eye(half)
    m[half:, :half] = -np.eye(half)
    return SymplecticForm(dim, m)


def is_sp_element(omega: SymplecticForm, a, tol: float = DEFAULT_TOL) -> bool:
    """True iff ||A^T Omega + Omega A||_inf <= tol."""
    a = _as_matrix(a)
    if a.shape[0] != omega.dim:
        raise DimensionError("matrix dimension does not match the form")
    return bool(np.abs(a.T @ omega.matrix + omega.matrix @ a).max() <= tol)


def is_symplectic_matrix(omega: SymplecticForm, b, tol: float = DEFAULT_TOL) -> bool:
    """True iff B^T Omega B = Omega within tol."""
    b = _as_matrix(b)
    if b.shape[0] != omega.dim:
        raise DimensionError("matrix dimension does not match the form")
    return bool(np.abs(b.T @ omega.matrix @ b - omega.matrix).max() <= tol)


@dataclass(frozen=True, eq=False)
class Generator:
    """An element A of sp(2n+2) with A^2 = lambda * Id."""

    A: np.ndarray
    lam: float

    def __post_init__(self):
        a = _as_matrix(self.A).copy()
        a.flags.writeable = False
        object.__setattr__(self, "A", a)

    @property
    def dim(self) -> int:
        return self.A.shape[0]


def make_generator(omega: SymplecticForm, a, tol: float = DEFAULT_TOL) -> Generator:
    """Validate A and return it as a Generator, extracting lambda from A^2."""
    a = _as_matrix(a)
    if a.shape[0] != omega.dim:
        raise DimensionError("generator dimension does not match the form")
    scale = float(np.abs(a).max())
    if scale == 0.0:
        raise NotASpaceFormError("A = 0 is rejected: the construction needs Ax != 0")
    if not is_sp_element(omega, a, tol * max(1.0, scale)):
        raise NotSymplecticError("A is not in sp(Omega)")
    a2 = a @ a
    lam = float(np.trace(a2)) / a.shape[0]
    if np.abs(a2 - lam * np.eye(a.shape[0])).max() > tol * max(1.0, scale**2):
        raise NotASpaceFormError("A^2 is not proportional to the identity")
    return Generator(a, lam)


@dataclass(frozen=True)
class GeneratorClass:
    """Tagged classification of a generator.

    case is one of 'hyperbolic' (lambda = k^2), 'elliptic' (lambda = -k^2,
    Hermitian signature (p+1, n-p)) or 'nilpotent' (lambda = 0, rank r,
    signature (p, r-p) of the quadratic form Omega(x, Ax), 2m = 2(n+1-r)).
    """

    case: str
    k: Optional[float] = None
    p: Optional[int] = None
    r: Optional[int] = None
    m: Optional[int] = None

    def __post_init__(self):
        if self.case not in ("hyperbolic", "elliptic", "nilpotent"):
            raise ValueError(f"unknown case {self.case!r}")

    def describe(self) -> str:
        if self.case == "hyperbolic":
            return f"hyperbolic(k={self.k})"
        if self.case == "elliptic":
            return f"elliptic(k={self.k}, p={self.p})"
        return f"nilpotent(r={self.r}, p={self.p}, m={self.m})"


def symmetric_signature(s: np.ndarray, tol: float = DEFAULT_TOL) -> tuple[int, int, int]:
    """Signature (pos, neg, zero) of a symmetric matrix by eigenvalue counting."""
    s = _as_matrix(s)
    w = np.linalg.eigvalsh(0.5 * (s + s.T))
    thresh = tol * max(1.0, float(np.abs(w).max()))
    pos = int(np.sum(w > thresh))
    neg = int(np.sum(w < -thresh))
    return pos, neg, len(w) - pos - neg


def classify_generator(
    omega: SymplecticForm, gen: Generator, tol: float = DEFAULT_TOL
) -> GeneratorClass:
    """Classify A into hyperbolic / elliptic / nilpotent with its integers.

    The quadratic form x -> Omega(x, Ax) has Gram matrix Omega A, which is
    symmetric exactly when A is in sp(Omega).
    """
    a = gen.A
    d = omega.dim
    n = d // 2 - 1
    lam = gen.lam
    q = omega.matrix @ a  # symmetric Gram matrix of Omega(x, Ax)
    if lam > tol:
        return GeneratorClass("hyperbolic", k=float(np.sqrt(lam)))
    if lam < -tol:
        pos, neg, _ = symmetric_signature(q, tol)
        if pos % 2 != 0 or pos + neg != d:
            raise ConditioningError("elliptic signature count is inconsistent")
        p = pos // 2 - 1
        return GeneratorClass("elliptic", k=float(np.sqrt(-lam)), p=p)
    scale = max(1.0, float(np.abs(a).max()))
    r = int(np.linalg.matrix_rank(a, tol=tol * scale))
    pos, neg, _ = symmetric_signature(q, tol)
    if pos + neg != r:
        raise ConditioningError("nilpotent signature does not match rank(A)")
    return GeneratorClass("nilpotent", r=r, p=pos, m=n + 1 - r)


def normal_form(klass: GeneratorClass, n: int) -> tuple[SymplecticForm, Generator]:
    """The case normal form (Omega_nf, A_nf) in dimension 2n+2.

    Hyperbolic and elliptic use the standard Omega.  Nilpotent uses the block
    form [[0,-G,0],[G,0,0],[0,0,Omega']] with G = Id_p (+) -Id_(r-p) and
    Omega' the standard form on the 2m-dimensional symplectic complement.
    """
    d = 2 * (n + 1)
    if klass.case == "hyperbolic":
        k = float(klass.k)
        if k <= 0:
            raise ValueError("hyperbolic case needs k > 0")
        a = np.diag(np.concatenate([k * np.ones(n + 1), -k * np.ones(n + 1)]))
        return standard_form(n), Generator(a, k * k)
    if klass.case == "elliptic":
        k = float(klass.k)
        p = int(klass.p)
        if k <= 0 or not 0 <= p <= n:
            raise ValueError("elliptic case needs k > 0 and 0 <= p <= n")
        g = np.diag(np.concatenate([np.ones(p + 1), -np.ones(n - p)]))
        j = np.zeros((d, d))
        j[: n + 1, n + 1 :] = -g
        j[n + 1 :, : n + 1] = g
        return standard_form(n), Generator(k * j, -k * k)
    r, p = int(klass.r), int(klass.p)
    m = n + 1 - r
    if not (1 <= r <= n + 1 and 1 <= p <= r):
        raise ValueError("nilpotent case needs 1 <= r <= n+1 and 1 <= p <= r")
    g = np.diag(np.concatenate([np.ones(p), -np.ones(r - p)]))
    om = np.zeros((d, d))
    om[:r, r : 2 * r] = -g
    om[r : 2 * r, :r] = g
    if m > 0:
        om[2 * r :, 2 * r :] = standard_form_dim(2 * m).matrix
    a = np.zeros((d, d))
    a[:r, r : 2 * r] = np.eye(r)
    return SymplecticForm(d, om), Generator(a, 0.0)


@dataclass(frozen=True, eq=False)
class AdaptedBasis:
    """Change of basis T carrying (Omega, A) to the case normal form."""

    T: np.ndarray
    klass: GeneratorClass

    def __post_init__(self):
        t = _as_matrix(self.T).copy()
        t.flags.writeable = False
        object.__setattr__(self, "T", t)


def _complex_scalar_mul(alpha: complex, v: np.ndarray, j: np.ndarray) -> np.ndarray:
    # (a + ib) . v = a v + b Jv in the real picture
    return alpha.real * v + alpha.imag * (j @ v)


def _hermitian_pair(omega: SymplecticForm, j: np.ndarray, x, y) -> complex:
    # <x, y> = Omega(x, Jy) - i Omega(x, y); C-linear in x, antilinear in y
    return complex(omega.pair(x, j @ y), -omega.pair(x, y))


def darboux_basis(
    vectors: np.ndarray, omega_matrix: np.ndarray, tol: float = DEFAULT_TOL
) -> np.ndarray:
    """Darboux basis of the span of the given columns.

    Returns columns [q_1..q_m, p_1..p_m] with Omega(q_i, p_j) = delta_ij and
    all other pairings zero, so that the restricted Gram matrix is the
    standard block form.
    """
    cols = np.asarray(vectors, dtype=float)
    if cols.ndim != 2:
        raise DimensionError("vectors must be a 2-d array of columns")
    q_basis, _ = np.linalg.qr(cols)
    work = [q_basis[:, i].copy() for i in range(q_basis.shape[1])]
    if len(work) % 2 != 0:
        raise NotSymplecticError("odd-dimensional span cannot be symplectic")
    qs, ps = [], []
    while work:
        u = work.pop(0)
        pairings = [abs(float(u @ omega_matrix @ w)) for w in work]
        if not pairings or max(pairings) <= tol:
            raise NotSymplecticError("span is degenerate for the form")
        idx = int(np.argmax(pairings))
        v = work.pop(idx)
        v = v / float(u @ omega_matrix @ v)
        rest = []
        for w in work:
            w = w - float(w @ omega_matrix @ v) * u + float(w @ omega_matrix @ u) * v
            rest.append(w)
        work = rest
        qs.append(u)
        ps.append(v)
    return np.column_stack(qs + ps)


def adapted_basis(
    omega: SymplecticForm, gen: Generator, tol: float = DEFAULT_TOL
) -> AdaptedBasis:
    """Compute T with T^-1 A T and T^T Omega T in the case normal form.

    Case 1 splits into the +-k eigenspaces (two Lagrangians) and pairs them
    by Omega.  Case 2 runs a pseudo-unitary Gram-Schmidt for the Hermitian
    form.  Case 3 builds the chain V' (isotropic complement of Ker A),
    AV', and the symplectic orthogonal W'.
    """
    klass = classify_generator(omega, gen, tol)
    a = gen.A
    d = omega.dim
    n = d // 2 - 1

    if klass.case == "hyperbolic":
        k = klass.k
        e_plus = null_space(a - k * np.eye(d))
        e_minus = null_space(a + k * np.eye(d))
        if e_plus.shape[1] != n + 1 or e_minus.shape[1] != n + 1:
            raise ConditioningError("eigenspaces of A do not split evenly")
        m = e_plus.T @ omega.matrix @ e_minus
        t = np.column_stack([e_plus, e_minus @ np.linalg.inv(m)])

    elif klass.case == "elliptic":
        k, p = klass.k, klass.p
        j = a / k
        plus: list[np.ndarray] = []
        minus: list[np.ndarray] = []
        rng = np.random.default_rng(0)
        seeds = [np.eye(d)[:, i] for i in range(d)]
        seeds += [rng.standard_normal(d) for _ in range(d)]
        for v in seeds:
            if len(plus) + len(minus) == n + 1:
                break
            v = v.astype(float).copy()
            for c, s in plus + minus:
                alpha = _hermitian_pair(omega, j, v, c)
                v = v - _complex_scalar_mul(s * alpha, c, j)
            w = omega.pair(v, j @ v)
            if abs(w) <= 1e-6 * max(1.0, float(v @ v)):
                continue
            c = v / np.sqrt(abs(w))
            (plus if w > 0 else minus).append((c, 1.0 if w > 0 else -1.0))
        if len(plus) != p + 1 or len(minus) != n - p:
            raise ConditioningError("pseudo-unitary Gram-Schmidt did not converge")
        ordered = plus + minus
        u_cols = [c for c, _ in ordered]
        v_cols = [s * (j @ c) for c, s in ordered]
        t = np.column_stack(u_cols + v_cols)

    else:
        r, p, m = klass.r, klass.p, klass.m
        # complement of Ker A from the right singular subspace of A
        _, sv, vt = np.linalg.svd(a)
        b0 = vt[:r].T
        beta = b0.T @ (omega.matrix @ a) @ b0
        omega0 = b0.T @ omega.matrix @ b0
        gamma = 0.5 * omega0 @ np.linalg.inv(beta)
        b1 = b0 + a @ (b0 @ gamma.T)
        if np.abs(b1.T @ omega.matrix @ b1).max() > 1e-7:
            raise ConditioningError("isotropic correction of V' failed")
        mg = b1.T @ (omega.matrix @ a) @ b1
        w_eig, v_eig = np.linalg.eigh(0.5 * (mg + mg.T))
        order = np.argsort(-w_eig)  # positives first
        w_eig, v_eig = w_eig[order], v_eig[:, order]
        if int(np.sum(w_eig > 0)) != p:
            raise ConditioningError("signature of g' does not match the class")
        v_cols = b1 @ (v_eig / np.sqrt(np.abs(w_eig)))
        a_cols = a @ v_cols
        if m > 0:
            pairings = np.column_stack([a_cols, v_cols]).T @ omega.matrix
            w_prime = null_space(pairings)
            if w_prime.shape[1] != 2 * m:
                raise ConditioningError("symplectic complement W' has wrong dimension")
            w_cols = darboux_basis(w_prime, omega.matrix, tol)
            t = np.column_stack([a_cols, v_cols, w_cols])
        else:
            t = np.column_stack([a_cols, v_cols])

    omega_nf, gen_nf = normal_form(klass, n)
    t_inv = np.linalg.inv(t)
    res_a = np.abs(t_inv @ a @ t - gen_nf.A).max()
    res_o = np.abs(t.T @ omega.matrix @ t - omega_nf.matrix).max()
    if max(res_a, res_o) > 1e-7 * max(1.0, float(np.abs(t).max()) ** 2):
        raise ConditioningError(
            f"adapted basis residuals too large (A: {res_a:.2e}, Omega: {res_o:.2e})"
        )
    return AdaptedBasis(t, klass)


def random_sp_algebra(
    omega: SymplecticForm, rng: np.random.Generator, scale: float = 1.0
) -> np.ndarray:
    """A random element of sp(Omega): Omega^-1 S for symmetric Gaussian S."""
    d = omega.dim
    s = rng.standard_normal((d, d))
    s = 0.5 * (s + s.T) * scale
    return np.linalg.solve(omega.matrix, s)


def random_symplectic(
    omega: SymplecticForm, rng: np.random.Generator, scale: float = 0.5
) -> np.ndarray:
    """A random element of the identity component of Sp(Omega)."""
    from scipy.linalg import expm

    return expm(random_sp_algebra(omega, rng, scale))


def generator_to_dict(klass: GeneratorClass, n: int) -> dict:
    """Serializable description of a normal-form generator."""
    out = {"n": int(n), "case": klass.case}
    if klass.case == "hyperbolic":
        out["k"] = float(klass.k)
    elif klass.case == "elliptic":
        out["k"] = float(klass.k)
        out["p"] = int(klass.p)
    else:
        out["r"] = int(klass.r)
        out["p"] = int(klass.p)
    return out


def generator_from_dict(data: dict) -> tuple[SymplecticForm, Generator, GeneratorClass]:
    """Build (Omega, A, class) from a structured description.

    Accepts either {"n", "case", ...case parameters...} producing the
    normal-form generator, or {"matrix": [[...]]} for an explicit A with the
    standard form.
    """
    if "matrix" in data:
        a = np.asarray(data["matrix"], dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2 != 0:
            raise DimensionError("explicit matrix must be square and even-dimensional")
        n = a.shape[0] // 2 - 1
        omega = standard_form(n)
        gen = make_generator(omega, a)
        return omega, gen, classify_generator(omega, gen)
    try:
        n = int(data["n"])
        case = data["case"]
    except KeyError as exc:
        raise DimensionError(f"generator description missing key {exc}") from exc
    if case == "hyperbolic":
        klass = GeneratorClass("hyperbolic", k=float(data.get("k", 1.0)))
    elif case == "elliptic":
        klass = GeneratorClass("elliptic", k=float(data.get("k", 1.0)), p=int(data.get("p", n)))
    elif case == "nilpotent":
        r = int(data.get("r", 1))
        klass = GeneratorClass("nilpotent", r=r, p=int(data.get("p", 1)), m=n + 1 - r)
    else:
        raise DimensionError(f"unknown generator case {case!r}")
    omega, gen = normal_form(klass, n)
    return omega, gen, klass
