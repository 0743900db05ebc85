"""Dense 3-way tensors and their canonical polyadic decomposition.

The tensors of interest are stacks of Hessian matrices, ``T[:, :, k]`` being
the Hessian at the ``k``-th regressor. They are symmetric in the first two
modes, so the decomposition reads ``T = sum_l w_l (x) v_l (x) v_l`` with one
shared factor ``V`` for modes 1 and 2 and a factor ``W`` for mode 3.

Two solvers are provided:

* :func:`cpd_als` -- alternating least squares, shared ``V`` by default;
* :func:`cpd_structured` -- ``W`` constrained to the second derivatives of
  polynomials in ``x = Z V``; solved by Levenberg-Marquardt over ``V`` with
  the polynomial coefficients eliminated in closed form at every step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sl

from .errors import MemoryBudgetError, NumericalError

__all__ = [
    "Tensor3",
    "CpdFactors",
    "CpdResult",
    "StructuredW",
    "StructuredCpdResult",
    "cpd_als",
    "cpd_structured",
    "structured_reconstruct",
    "structured_jacobian",
    "jacobian_storage_elements",
    "check_jacobian_budget",
    "normalize_columns",
    "demo_jacobian_matrix_nonuniqueness",
]

DEFAULT_BUDGET_BYTES = 4 * 1024**3


@dataclass(frozen=True, eq=False)
class Tensor3:
    """Dense tensor indexed ``data[i, j, k]``; the flat layout has ``k`` slowest."""

    data: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 3:
            raise ValueError("Tensor3 needs a 3-D array")
        if self.symmetric:
            if data.shape[0] != data.shape[1]:
                raise ValueError("symmetric tensor needs I == J")
            if not np.array_equal(data, data.transpose(1, 0, 2)):
                raise ValueError("tensor is not symmetric in its first two modes")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(s) for s in self.data.shape)

    def norm(self) -> float:
        return float(np.sqrt((self.data * self.data).sum()))

    def flat(self) -> np.ndarray:
        return self.data.ravel(order="F")

    def save(self, path) -> None:
        """Write ``<path>`` (little-endian float64) and ``<path>.json`` header."""
        path = Path(path)
        path.write_bytes(self.flat().astype("<f8").tobytes())
        header = {"dims": list(self.dims), "symmetric": self.symmetric, "layout": "k-slowest"}
        path.with_name(path.name + ".json").write_text(json.dumps(header))

    @classmethod
    def load(cls, path) -> Tensor3:
        path = Path(path)
        header = json.loads(path.with_name(path.name + ".json").read_text())
        if header.get("layout") != "k-slowest":
            raise ValueError("unsupported tensor layout")
        dims = tuple(header["dims"])
        flat = np.frombuffer(path.read_bytes(), dtype="<f8")
        if flat.size != np.prod(dims):
            raise ValueError("tensor file size does not match header dims")
        return cls(flat.reshape(dims, order="F"), bool(header["symmetric"]))


def normalize_columns(V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit 2-norm columns with the largest-magnitude entry positive.

    Returns the normalized matrix and the signed scale of each column
    (``V == Vn * scale``). Columns already within a few ulps of unit norm
    are not rescaled, which makes the operation idempotent.
    """
    V = np.array(V, dtype=float)
    scale = np.ones(V.shape[1])
    for l in range(V.shape[1]):
        col = V[:, l]
        nrm = float(np.sqrt(col @ col))
        if nrm == 0.0:
            continue
        if abs(nrm - 1.0) > 4 * np.finfo(float).eps:
            col = col / nrm
        else:
            nrm = 1.0
        sign = 1.0 if col[np.argmax(np.abs(col))] >= 0 else -1.0
        V[:, l] = sign * col
        scale[l] = sign * nrm
    return V, scale


@dataclass
class CpdFactors:
    """Factors of ``T ~ sum_l W[:, l] (x) V[:, l] (x) V2[:, l]``.

    With ``shared_modes`` (the default) ``V2`` is ``V`` itself.
    """

    V: np.ndarray
    W: np.ndarray
    shared_modes: bool = True
    V2: np.ndarray | None = None

    def __post_init__(self):
        if self.V.shape[1] != self.W.shape[1]:
            raise ValueError("factor column counts differ")
        if not self.shared_modes and (self.V2 is None or self.V2.shape[1] != self.V.shape[1]):
            raise ValueError("unshared factors need a matching V2")

    @property
    def rank(self) -> int:
        return int(self.V.shape[1])

    @property
    def second(self) -> np.ndarray:
        return self.V if self.shared_modes else self.V2

    def reconstruct(self) -> np.ndarray:
        return np.einsum("il,jl,kl->ijk", self.V, self.second, self.W)

    def normalized(self) -> CpdFactors:
        V, s1 = normalize_columns(self.V)
        if self.shared_modes:
            # v -> -v leaves v v^T unchanged, so only the magnitude moves into W
            return CpdFactors(V, self.W * (s1 * s1), True)
        V2, s2 = normalize_columns(self.V2)
        return CpdFactors(V, self.W * (s1 * s2), False, V2)

    def to_csv(self, prefix) -> list[Path]:
        prefix = Path(prefix)
        mats = {"V": self.V, "W": self.W}
        if not self.shared_modes:
            mats["V2"] = self.V2
        paths = []
        for name, mat in mats.items():
            p = prefix.with_name(f"{prefix.name}_{name}.csv")
            np.savetxt(p, mat, delimiter=",", fmt="%.17g")
            paths.append(p)
        return paths


@dataclass
class CpdResult:
    factors: CpdFactors
    history: list[float]
    converged: bool
    restarts: list[list[float]] = field(default_factory=list)

    @property
    def error(self) -> float:
        return self.history[-1]


def _rel_error(T: np.ndarray, T_hat: np.ndarray, tnorm: float) -> float:
    diff = T - T_hat
    e = float(np.sqrt((diff * diff).sum()))
    return e / tnorm if tnorm > 0 else e


def _solve_gram(G: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Solve ``X G = R`` for symmetric ``G`` (``R`` is rows x r)."""
    d = np.sqrt(np.abs(np.diag(G)))
    d[d == 0] = 1.0
    Gs = G / np.outer(d, d)
    X, *_ = sl.lstsq(Gs, (R / d).T, lapack_driver="gelsd")
    return (X / d[:, None]).T


def _w_update(T, V, V2):
    G = (V.T @ V) * (V2.T @ V2)
    R = np.einsum("ijk,il,jl->kl", T, V, V2)
    return _solve_gram(G, R)


def _gevd_init(T: np.ndarray, r: int, rng) -> np.ndarray | None:
    """Simultaneous-diagonalization guess for the shared factor (needs r <= I)."""
    I, _, K = T.shape
    if r > I:
        return None
    U, s, _ = np.linalg.svd(T.reshape(I, -1), full_matrices=False)
    if s[0] == 0:
        return None
    Ur = U[:, :r]
    core = np.einsum("ia,ijk,jb->abk", Ur, T, Ur)
    a, b = rng.standard_normal(K), rng.standard_normal(K)
    Sa, Sb = core @ a, core @ b
    try:
        vals, vecs = sl.eig(Sa, Sb)
    except (sl.LinAlgError, ValueError):
        return None
    vecs = np.real(vecs)
    if not np.isfinite(vecs).all():
        return None
    # eigenvectors of (Sa, Sb) are the columns of inv(Ur^T V)^T
    try:
        Vt = np.linalg.inv(vecs.T)
    except np.linalg.LinAlgError:
        return None
    return Ur @ Vt


def _als_shared(T, V, max_iter, tol, tnorm):
    V = normalize_columns(V)[0]
    W = _w_update(T, V, V)
    err = _rel_error(T, np.einsum("il,jl,kl->ijk", V, V, W), tnorm)
    history = [err]
    converged = False
    for _ in range(max_iter):
        if err <= 1e-15:
            converged = True
            break
        G = (W.T @ W) * (V.T @ V)
        R = np.einsum("ijk,jl,kl->il", T, V, W)
        A = _solve_gram(G, R)
        A = normalize_columns(A)[0]
        A = A * np.sign(np.sum(A * V, axis=0) + (np.sum(A * V, axis=0) == 0))
        accepted = False
        step = 1.0
        for _ in range(8):
            Vc = normalize_columns(V + step * (A - V))[0]
            Wc = _w_update(T, Vc, Vc)
            ec = _rel_error(T, np.einsum("il,jl,kl->ijk", Vc, Vc, Wc), tnorm)
            if ec <= err:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        decrease = (err - ec) / err if err > 0 else 0.0
        V, W, err = Vc, Wc, ec
        history.append(err)
        if decrease < tol:
            converged = True
            break
    return V, W, history, converged


def _als_unshared(T, A, B, max_iter, tol, tnorm):
    W = _w_update(T, A, B)
    err = _rel_error(T, np.einsum("il,jl,kl->ijk", A, B, W), tnorm)
    history = [err]
    converged = False
    for _ in range(max_iter):
        if err <= 1e-15:
            converged = True
            break
        A1 = _solve_gram((W.T @ W) * (B.T @ B), np.einsum("ijk,jl,kl->il", T, B, W))
        B1 = _solve_gram((W.T @ W) * (A1.T @ A1), np.einsum("ijk,il,kl->jl", T, A1, W))
        W1 = _w_update(T, A1, B1)
        e1 = _rel_error(T, np.einsum("il,jl,kl->ijk", A1, B1, W1), tnorm)
        if e1 > err:
            # only possible through rounding: keep the previous iterate
            converged = True
            break
        decrease = (err - e1) / err if err > 0 else 0.0
        A, B, W, err = A1, B1, W1, e1
        history.append(err)
        if decrease < tol:
            converged = True
            break
    return A, B, W, history, converged


def cpd_als(
    T: Tensor3 | np.ndarray,
    r: int,
    max_iter: int = 3000,
    tol: float = 1e-12,
    restarts: int = 5,
    seed: int = 0,
    shared: bool = True,
    init: str = "gevd",
) -> CpdResult:
    """Rank-``r`` CPD by alternating least squares.

    Parameters
    ----------
    T : Tensor3 or ndarray of shape (I, J, K)
    r : int
        Number of rank-one terms.
    max_iter, tol :
        Per-restart iteration cap and relative-decrease stopping threshold.
    restarts : int
        Number of starting points; the best final error is kept.
    seed : int
        Seed for the random starting points.
    shared : bool
        Share one factor between modes 1 and 2 (requires ``I == J``). Set to
        False for the unconstrained three-factor decomposition.
    init : {"gevd", "random"}
        With "gevd" the first start comes from simultaneous diagonalization
        of two random slice combinations; the others are random.

    Returns
    -------
    CpdResult
        Normalized factors and the relative-error history of the best
        restart (non-increasing by construction).
    """
    data = T.data if isinstance(T, Tensor3) else np.asarray(T, dtype=float)
    if r < 1:
        raise ValueError("rank must be >= 1")
    if not np.isfinite(data).all():
        raise NumericalError("tensor contains NaN or infinite entries")
    I, J, K = data.shape
    if shared and I != J:
        raise ValueError("shared factors need I == J")
    tnorm = float(np.sqrt((data * data).sum()))
    rng = np.random.default_rng(seed)
    if tnorm == 0.0:
        V = normalize_columns(rng.standard_normal((I, r)))[0]
        V2 = None if shared else normalize_columns(rng.standard_normal((J, r)))[0]
        return CpdResult(CpdFactors(V, np.zeros((K, r)), shared, V2), [0.0], True, [[0.0]])
    best = None
    all_hist = []
    for s in range(max(restarts, 1)):
        V0 = _gevd_init(data, r, rng) if (s == 0 and init == "gevd" and shared) else None
        if V0 is None or not np.isfinite(V0).all() or np.linalg.norm(V0, axis=0).min() == 0:
            V0 = rng.standard_normal((I, r))
        if shared:
            V, W, hist, conv = _als_shared(data, V0, max_iter, tol, tnorm)
            fac = CpdFactors(V, W, True)
        else:
            B0 = rng.standard_normal((J, r))
            A, B, W, hist, conv = _als_unshared(data, V0, B0, max_iter, tol, tnorm)
            fac = CpdFactors(A, W, False, B)
        all_hist.append(hist)
        if best is None or hist[-1] < best[1][-1]:
            best = (fac, hist, conv)
    fac, hist, conv = best
    return CpdResult(fac.normalized(), hist, conv, all_hist)


def jacobian_storage_elements(N: int, r: int, m: int, M: int) -> int:
    """Entries of the Jacobian of an ``m x m x N`` Hessian tensor with respect
    to ``r`` branches of ``m`` mixing weights and ``M - 2`` free coefficients."""
    for name, v in (("N", N), ("r", r), ("m", m), ("M", M)):
        if v < 1:
            raise ValueError(f"{name} must be >= 1")
    return N * r * m * m * (m + M - 2)


def check_jacobian_budget(N, r, m, M, budget_bytes=DEFAULT_BUDGET_BYTES, itemsize=8) -> int:
    """Raise :class:`MemoryBudgetError` if the full Jacobian would not fit."""
    n_el = jacobian_storage_elements(N, r, m, M)
    need = n_el * itemsize
    if need > budget_bytes:
        raise MemoryBudgetError(
            f"Jacobian of the Hessian needs {n_el} elements ({need / 1024**3:.4g} GiB),"
            f" budget is {budget_bytes / 1024**3:.4g} GiB",
            n_el,
            int(budget_bytes),
        )
    return n_el


def _second_derivative_basis(x: np.ndarray, M: int, order: int = 0) -> np.ndarray:
    """``d^order/dx^order`` of ``j (j-1) x^(j-2)`` for ``j = 2..M``; trailing axis."""
    out = np.zeros(x.shape + (M - 1,))
    for j in range(2, M + 1):
        p = j - 2 - order
        if p < 0:
            continue
        c = float(j * (j - 1))
        for s in range(order):
            c *= j - 2 - s
        out[..., j - 2] = c * x**p
    return out


@dataclass
class StructuredW:
    """``W[k, l] = sum_{j=2..M} j (j-1) coeffs[j-2, l] x_l(k)^(j-2)``."""

    coeffs: np.ndarray

    @property
    def degree(self) -> int:
        return int(self.coeffs.shape[0]) + 1

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        B = _second_derivative_basis(np.asarray(x, dtype=float), self.degree)
        return np.einsum("klq,ql->kl", B, self.coeffs)

    def derivative(self, x: np.ndarray) -> np.ndarray:
        B = _second_derivative_basis(np.asarray(x, dtype=float), self.degree, order=1)
        return np.einsum("klq,ql->kl", B, self.coeffs)


def _chunk_terms(V, C, Zc, M, with_jacobian=True):
    """Reconstruction and Jacobian blocks for a slice range.

    Rows are ordered ``(k, i, j)``; ``V`` parameters branch-major (``l*m + p``),
    coefficient parameters branch-major (``l*(M-1) + q``).
    """
    m, r = V.shape
    kc = Zc.shape[0]
    x = Zc @ V
    B = _second_derivative_basis(x, M)
    W = np.einsum("klq,ql->kl", B, C)
    VV = V[:, None, :] * V[None, :, :]
    That = np.einsum("ijl,kl->kij", VV, W)
    if not with_jacobian:
        return That, None, None
    Wd = np.einsum("klq,ql->kl", _second_derivative_basis(x, M, order=1), C)
    eye = np.eye(m)
    # d That[k,i,j] / d V[p,l]
    Jv = (
        np.einsum("ip,jl,kl->kijlp", eye, V, W)
        + np.einsum("jp,il,kl->kijlp", eye, V, W)
        + np.einsum("ijl,kl,kp->kijlp", VV, Wd, Zc)
    )
    Jc = np.einsum("ijl,klq->kijlq", VV, B)
    return That, Jv.reshape(kc * m * m, r * m), Jc.reshape(kc * m * m, r * (M - 1))


def structured_reconstruct(V, C, Z) -> np.ndarray:
    """Tensor ``T[i, j, k] = sum_l V[i,l] V[j,l] W[k,l]`` with structured ``W``."""
    V = np.asarray(V, dtype=float)
    C = np.asarray(C, dtype=float)
    That, _, _ = _chunk_terms(V, C, np.asarray(Z, dtype=float), C.shape[0] + 1, False)
    return That.transpose(1, 2, 0)


def structured_jacobian(V, C, Z) -> tuple[np.ndarray, np.ndarray]:
    """Materialized Jacobians with respect to ``V`` and the coefficients.

    Only meant for small problems (tests, diagnostics); the solver never
    builds the full matrices.
    """
    V = np.asarray(V, dtype=float)
    C = np.asarray(C, dtype=float)
    _, Jv, Jc = _chunk_terms(V, C, np.asarray(Z, dtype=float), C.shape[0] + 1)
    return Jv, Jc


def _chunks(n, size):
    for a in range(0, n, size):
        yield a, min(a + size, n)


def _coef_normal_equations(Tk, V, Z, M):
    """Gram matrix and right-hand side of the coefficient least squares."""
    x = Z @ V
    B = _second_derivative_basis(x, M)  # (K, r, M-1)
    r = V.shape[1]
    q = M - 1
    Bf = B.reshape(B.shape[0], r * q)
    VtV2 = (V.T @ V) ** 2
    G = (Bf.T @ Bf) * np.kron(VtV2, np.ones((q, q)))
    proj = np.einsum("kij,il,jl->kl", Tk, V, V)
    rhs = np.einsum("klq,kl->lq", B, proj).reshape(-1)
    return G, rhs


def _solve_coefs(G, rhs, r, M):
    d = np.sqrt(np.abs(np.diag(G)))
    d[d == 0] = 1.0
    sol, *_ = sl.lstsq(G / np.outer(d, d), rhs / d, lapack_driver="gelsd")
    return (sol / d).reshape(r, M - 1).T


class _StructuredProblem:
    def __init__(self, T, Z, M, chunk_elems=2_000_000):
        self.Tk = np.ascontiguousarray(T.transpose(2, 0, 1))
        self.Z = Z
        self.M = M
        self.tnorm2 = float((T * T).sum())
        m = T.shape[0]
        self.chunk = max(1, chunk_elems // (m * m * max(m, 1) * 4))

    def coefs(self, V):
        G, rhs = _coef_normal_equations(self.Tk, V, self.Z, self.M)
        return _solve_coefs(G, rhs, V.shape[1], self.M)

    def cost(self, V):
        C = self.coefs(V)
        total = 0.0
        for a, b in _chunks(self.Z.shape[0], self.chunk):
            That, _, _ = _chunk_terms(V, C, self.Z[a:b], self.M, False)
            R = self.Tk[a:b] - That
            total += float((R * R).sum())
        return total, C

    def normal_equations(self, V, C):
        m, r = V.shape
        pv, pc = m * r, r * (self.M - 1)
        JvJv = np.zeros((pv, pv))
        AJv = np.zeros((pc, pv))
        AA = np.zeros((pc, pc))
        JvR = np.zeros(pv)
        for a, b in _chunks(self.Z.shape[0], self.chunk):
            That, Jv, Jc = _chunk_terms(V, C, self.Z[a:b], self.M)
            R = (self.Tk[a:b] - That).reshape(-1)
            JvJv += Jv.T @ Jv
            AJv += Jc.T @ Jv
            AA += Jc.T @ Jc
            JvR += Jv.T @ R
        return JvJv, AJv, AA, JvR


@dataclass
class StructuredCpdResult:
    V: np.ndarray
    W: StructuredW
    history: list[float]
    iterations: int
    status: str
    rel_error: float
    jacobian_elements: int

    def __iter__(self):
        return iter((self.V, self.W))

    def factors(self, Z) -> CpdFactors:
        return CpdFactors(self.V, self.W.evaluate(np.asarray(Z) @ self.V), True)


def cpd_structured(
    T: Tensor3 | np.ndarray,
    Z: np.ndarray,
    r: int,
    M: int,
    V0: np.ndarray | None = None,
    max_iter: int = 200,
    tol: float = 1e-10,
    lam0: float = 1e-3,
    budget_bytes: int = DEFAULT_BUDGET_BYTES,
    als_restarts: int = 5,
    seed: int = 0,
) -> StructuredCpdResult:
    """CPD of a Hessian tensor with polynomial-second-derivative ``W``.

    ``W[:, l]`` is forced to be ``g_l''(Z @ V[:, l])`` for a degree-``M``
    polynomial ``g_l``. The coefficients enter linearly and are solved for at
    every ``V``; Levenberg-Marquardt with the projected Jacobian updates ``V``.
    ``V0`` defaults to the shared-mode ALS solution.
    """
    if isinstance(T, Tensor3):
        if not T.symmetric:
            raise ValueError("structured CPD needs a tensor flagged symmetric")
        data = T.data
    else:
        data = np.asarray(T, dtype=float)
    Z = np.asarray(Z, dtype=float)
    m, _, K = data.shape
    if Z.shape != (K, m):
        raise ValueError(f"Z must have shape {(K, m)}, got {Z.shape}")
    if M < 2:
        raise ValueError("branch degree M must be >= 2 for a non-zero Hessian")
    n_el = check_jacobian_budget(K, r, m, M, budget_bytes)
    if V0 is None:
        V0 = cpd_als(data, r, restarts=als_restarts, seed=seed).factors.V
    prob = _StructuredProblem(data, Z, M)
    V = normalize_columns(V0)[0]
    cost, C = prob.cost(V)
    history = [cost]
    lam = lam0
    status = "max_iter"
    it = 0
    while it < max_iter:
        if cost <= 1e-30 * max(prob.tnorm2, 1e-300):
            status = "exact"
            break
        it += 1
        JvJv, AJv, AA, g = prob.normal_equations(V, C)
        d = np.sqrt(np.abs(np.diag(AA)))
        d[d == 0] = 1.0
        X, *_ = sl.lstsq(AA / np.outer(d, d), AJv / d[:, None], lapack_driver="gelsd")
        H = JvJv - AJv.T @ (X / d[:, None])
        H = 0.5 * (H + H.T)
        diag = np.maximum(np.diag(H), 1e-12 * max(np.diag(H).max(), 1e-300))
        accepted = False
        while lam <= 1e12:
            step, *_ = sl.lstsq(H + lam * np.diag(diag), g, lapack_driver="gelsd")
            Vc = normalize_columns(V + step.reshape(r, m).T)[0]
            cc, Cc = prob.cost(Vc)
            if cc < cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            status = "stalled"
            break
        decrease = (cost - cc) / cost
        V, C, cost = Vc, Cc, cc
        history.append(cost)
        lam = max(lam / 10.0, 1e-15)
        if decrease < tol:
            status = "converged"
            break
    rel = float(np.sqrt(cost / prob.tnorm2)) if prob.tnorm2 > 0 else float(np.sqrt(cost))
    return StructuredCpdResult(V, StructuredW(C), history, it, status, rel, n_el)


def demo_jacobian_matrix_nonuniqueness(model, Z, transform=None, seed: int = 0) -> dict:
    """Show that a stacked-Jacobian factorization ``J = V W^T`` is not unique.

    ``W[k, i] = g_i'(v_i^T z(k))``. For an invertible ``transform`` ``Q``
    (random, condition < 1e3, by default) the factors ``V Q^-1`` and
    ``Q W^T`` reproduce ``J`` equally well although they differ from
    ``V`` and ``W``.
    """
    Z = np.asarray(Z, dtype=float)
    V = np.asarray(model.V, dtype=float)
    r = V.shape[1]
    X = Z @ V
    W = np.column_stack([g(X[:, i], 1) for i, g in enumerate(model.branches)])
    J = V @ W.T
    if transform is None:
        rng = np.random.default_rng(seed)
        while True:
            Q = rng.standard_normal((r, r))
            if np.linalg.cond(Q) < 1e3:
                break
    else:
        Q = np.asarray(transform, dtype=float)
    V_alt = V @ np.linalg.inv(Q)
    Wt_alt = Q @ W.T
    J_alt = V_alt @ Wt_alt
    jnorm = float(np.linalg.norm(J))
    return {
        "rank": r,
        "transform": Q.tolist(),
        "transform_condition": float(np.linalg.cond(Q)),
        "reconstruction_error": float(np.linalg.norm(J - J_alt) / (jnorm if jnorm else 1.0)),
        "factor_change": float(np.linalg.norm(V_alt - V) / np.linalg.norm(V)),
        "V_alt": V_alt.tolist(),
        "note": "the Jacobian matrix admits infinitely many factorizations",
    }
