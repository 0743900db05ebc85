"""Decoupled polynomial NARX models and the identification pipeline.

A decoupled model replaces the multivariate polynomial of a NARX model by

    y_hat(z) = c0 + sum_i g_i(v_i^T z)

with a mixing matrix ``V`` (columns ``v_i``) and univariate polynomials
``g_i`` without constant term. Fitting is a separable least-squares problem:
for a given ``V`` the coefficients follow from ordinary least squares, and
``V`` is optimized with Levenberg-Marquardt on the variable-projection
Jacobian. ``V`` is initialized from a CPD of the coupled model's Hessians.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb, factorial
from typing import Sequence

import numpy as np
import scipy.linalg as sl

from . import __version__
from .cpd import (
    DEFAULT_BUDGET_BYTES,
    Tensor3,
    check_jacobian_budget,
    cpd_als,
    cpd_structured,
    normalize_columns,
)
from .errors import NumericalError, StageError, UnstableSimulationError
from .metrics import compute_metrics
from .narx import (
    Dataset,
    Frols,
    NarxConfig,
    RegressorTable,
    build_regressors,
    fit_full_pnarx,
    predict_one_step,
    simulate_free_run,
)
from .poly import CoupledPolynomial, UnivariatePoly, monomial_exponents

__all__ = [
    "DecoupledModel",
    "SlsReport",
    "DecoupleOptions",
    "build_hessian_tensor",
    "expand_decoupled",
    "model_from_mixing",
    "random_init",
    "init_from_cpd",
    "varpro_jacobian",
    "refine_sls",
    "count_dpnarx_params",
    "decouple",
    "run_algorithm1",
    "branch_curves",
    "filter_responses",
    "evaluate_model",
]


@dataclass(eq=False)
class DecoupledModel:
    """``y_hat(z) = c0 + sum_i branches[i](V[:, i] @ z)``."""

    V: np.ndarray
    branches: list[UnivariatePoly]
    c0: float
    cfg: NarxConfig
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.V = np.array(self.V, dtype=float)
        if self.V.ndim != 2 or self.V.shape[1] != len(self.branches):
            raise ValueError("V must have one column per branch")
        if self.V.shape[0] != self.cfg.m:
            raise ValueError("V row count must equal n_u + n_y")
        self.c0 = float(self.c0)

    @property
    def r(self) -> int:
        return len(self.branches)

    @property
    def m(self) -> int:
        return int(self.V.shape[0])

    @property
    def degree(self) -> int:
        return max(g.degree for g in self.branches)

    @property
    def n_params(self) -> int:
        return count_dpnarx_params(self.m, self.degree, self.r)

    def branch_inputs(self, Z) -> np.ndarray:
        """``x = Z V`` accumulated in a fixed order (row count does not matter)."""
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        X = np.zeros((Z.shape[0], self.r))
        for k in range(self.m):
            X += Z[:, k : k + 1] * self.V[k]
        return X

    def predict(self, Z) -> np.ndarray:
        X = self.branch_inputs(Z)
        out = np.full(X.shape[0], self.c0)
        for i, g in enumerate(self.branches):
            out = out + g(X[:, i])
        return out

    __call__ = predict

    def normalized(self) -> DecoupledModel:
        """Unit-norm, sign-fixed columns with the scale moved into the branches."""
        Vn, scale = normalize_columns(self.V)
        branches = [g.rescaled_input(a) for g, a in zip(self.branches, scale)]
        return DecoupledModel(Vn, branches, self.c0, self.cfg, dict(self.provenance))

    def gauge_transform(self, scales: Sequence[float]) -> DecoupledModel:
        """Replace ``(v_i, g_i(x))`` by ``(a_i v_i, g_i(x / a_i))``."""
        scales = np.asarray(scales, dtype=float)
        branches = [g.rescaled_input(1.0 / a) for g, a in zip(self.branches, scales)]
        return DecoupledModel(self.V * scales, branches, self.c0, self.cfg, dict(self.provenance))

    def permuted(self, order: Sequence[int]) -> DecoupledModel:
        order = list(order)
        return DecoupledModel(
            self.V[:, order], [self.branches[i] for i in order], self.c0, self.cfg, dict(self.provenance)
        )

    def to_dict(self) -> dict:
        return {
            "config": self.cfg.to_dict(),
            "V": self.V.tolist(),
            "branches": [g.to_dict() for g in self.branches],
            "c0": self.c0,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> DecoupledModel:
        return cls(
            np.array(d["V"], dtype=float),
            [UnivariatePoly.from_dict(b) for b in d["branches"]],
            d["c0"],
            NarxConfig.from_dict(d["config"]),
            d.get("provenance", {}),
        )


def count_dpnarx_params(m: int, M: int, r: int) -> int:
    """Parameters of a decoupled model: ``r`` mixing vectors, ``r`` degree-``M`` branches, one offset."""
    for name, v in (("m", m), ("M", M), ("r", r)):
        if v < 1:
            raise ValueError(f"{name} must be >= 1")
    return (m + M) * r + 1


def build_hessian_tensor(p: CoupledPolynomial, Z) -> Tensor3:
    """Stack the Hessians of ``p`` at the rows of ``Z`` into an ``m x m x N`` tensor."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[1] != p.input_dim:
        raise ValueError(f"Z must have {p.input_dim} columns")
    H = p.hessian(Z)
    return Tensor3(np.ascontiguousarray(H.transpose(1, 2, 0)), symmetric=True)


def expand_decoupled(model: DecoupledModel, max_terms: int = 1_000_000) -> CoupledPolynomial:
    """Multinomial expansion of a decoupled model into monomial form."""
    m, M = model.m, model.degree
    if comb(m + M, M) > max_terms:
        raise NumericalError(f"expansion would have {comb(m + M, M)} terms (limit {max_terms})")
    exps = monomial_exponents(m, M)
    coefs = np.zeros(len(exps))
    coefs[0] = model.c0
    fact = [factorial(k) for k in range(M + 1)]
    for t, e in enumerate(exps):
        d = int(e.sum())
        if d == 0:
            continue
        multinom = fact[d]
        for ek in e:
            multinom //= fact[ek]
        acc = 0.0
        for i, g in enumerate(model.branches):
            if d > g.degree:
                continue
            acc += g.coeffs[d - 1] * multinom * float(np.prod(model.V[:, i] ** e))
        coefs[t] = acc
    return CoupledPolynomial(m, M, exps, coefs)


@dataclass
class _SeparableFit:
    X: np.ndarray
    colscale: np.ndarray
    U: np.ndarray
    s: np.ndarray
    Wt: np.ndarray
    coef: np.ndarray
    residual: np.ndarray
    cond: float
    rank: int

    @property
    def cost(self) -> float:
        return float(self.residual @ self.residual)


def _vandermonde(V, Z, M) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(Z) @ V
    N, r = X.shape
    cols = [np.ones((N, 1))]
    for i in range(r):
        cols.append(X[:, i : i + 1] ** np.arange(1, M + 1))
    return np.hstack(cols), X


def _separable_fit(V, Z, y, M, rcond=1e-13) -> _SeparableFit:
    A, _ = _vandermonde(V, Z, M)
    d = np.sqrt((A * A).sum(axis=0))
    d[d == 0] = 1.0
    U, s, Wt = np.linalg.svd(A / d, full_matrices=False)
    keep = s > rcond * s[0]
    rank = int(keep.sum())
    U, s, Wt = U[:, keep], s[keep], Wt[keep]
    coef = (Wt.T @ ((U.T @ y) / s)) / d
    resid = y - A @ coef
    cond = float(s[0] / s[-1]) if rank == A.shape[1] else float("inf")
    return _SeparableFit(A, d, U, s, Wt, coef, resid, cond, rank)


def _branches_from_coef(coef, r, M) -> tuple[float, list[UnivariatePoly]]:
    return float(coef[0]), [UnivariatePoly(coef[1 + i * M : 1 + (i + 1) * M]) for i in range(r)]


def model_from_mixing(V, tab: RegressorTable, M: int, cfg: NarxConfig, provenance=None) -> DecoupledModel:
    """Decoupled model with mixing matrix ``V`` and least-squares branches."""
    V = normalize_columns(V)[0]
    fit = _separable_fit(V, tab.Z, tab.target, M)
    c0, branches = _branches_from_coef(fit.coef, V.shape[1], M)
    return DecoupledModel(V, branches, c0, cfg, dict(provenance or {}))


def varpro_jacobian(V, Z, y, M, exact: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Residual ``P_perp y`` and the projected output Jacobian ``J_s``.

    ``J_s = J_v - J_c (J_c^T J_c)^-1 J_c^T J_v`` with ``J_v[:, l*m + p] =
    g_l'(x_l) z_p``. With ``exact=True`` the term dropped by that first-order
    form is added back, so that ``d(residual)/dV == -J_s`` exactly.
    """
    V = np.asarray(V, dtype=float)
    Z = np.asarray(Z, dtype=float)
    m, r = V.shape
    fit = _separable_fit(V, Z, y, M)
    _, branches = _branches_from_coef(fit.coef, r, M)
    X = Z @ V
    Jv = np.empty((Z.shape[0], r * m))
    for l, g in enumerate(branches):
        Jv[:, l * m : (l + 1) * m] = g(X[:, l], 1)[:, None] * Z
    Js = Jv - fit.U @ (fit.U.T @ Jv)
    if exact:
        n_c = fit.X.shape[1]
        for l, g in enumerate(branches):
            B1 = g.basis(X[:, l], 1)
            for p in range(m):
                b = np.zeros(n_c)
                b[1 + l * M : 1 + (l + 1) * M] = B1.T @ (Z[:, p] * fit.residual)
                Js[:, l * m + p] += fit.U @ ((fit.Wt @ (b / fit.colscale)) / fit.s)
    return fit.residual, Js


@dataclass
class SlsReport:
    """Separable least-squares refinement trace (costs are ``||y - y_hat||^2``)."""

    costs: list[float]
    iterations: int
    initializer: str
    status: str
    condition: float
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "costs": self.costs,
            "iterations": self.iterations,
            "initializer": self.initializer,
            "status": self.status,
            "condition": self.condition,
            "notes": self.notes,
        }


def refine_sls(
    init: DecoupledModel,
    tab: RegressorTable,
    max_iter: int = 200,
    tol: float = 1e-10,
    lam0: float = 1e-3,
    initializer: str | None = None,
    seed: int = 0,
) -> tuple[DecoupledModel, SlsReport]:
    """Minimize ``||y - y_hat||^2`` over ``V`` with the coefficients eliminated.

    Levenberg-Marquardt (Marquardt scaling, damping x10 on rejection and /10
    on acceptance). ``V`` is renormalized after every accepted step. Stops
    when an accepted step lowers the cost by less than ``tol`` relative, when
    no step can be accepted, or after ``max_iter`` iterations.
    """
    Z, y = tab.Z, tab.target
    M = init.degree
    if Z.shape[1] != init.m:
        raise ValueError("model and regressor table dimensions differ")
    notes: list[str] = []
    V = normalize_columns(init.V)[0]
    r, m = V.shape[1], V.shape[0]
    fit = _separable_fit(V, Z, y, M)
    if fit.rank < fit.X.shape[1]:
        rng = np.random.default_rng(seed)
        V = normalize_columns(V + 1e-6 * rng.standard_normal(V.shape))[0]
        fit = _separable_fit(V, Z, y, M)
        notes.append(f"rank-deficient regression matrix at start; V jittered (rank now {fit.rank})")
    costs = [fit.cost]
    lam = lam0
    status = "max_iter"
    it = 0
    while it < max_iter:
        it += 1
        resid, Js = varpro_jacobian(V, Z, y, M)
        dcol = np.sqrt((Js * Js).sum(axis=0))
        dcol = np.maximum(dcol, 1e-12 * max(dcol.max(), 1e-300))
        accepted = False
        while lam <= 1e12:
            A = np.vstack([Js, np.diag(np.sqrt(lam) * dcol)])
            rhs = np.concatenate([resid, np.zeros(r * m)])
            step, *_ = sl.lstsq(A, rhs, lapack_driver="gelsd")
            Vc = normalize_columns(V + step.reshape(r, m).T)[0]
            fc = _separable_fit(Vc, Z, y, M)
            if fc.cost < fit.cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            status = "exact" if fit.cost <= 1e-24 * float(y @ y) else "stalled"
            break
        decrease = (fit.cost - fc.cost) / fit.cost
        V, fit = Vc, fc
        costs.append(fit.cost)
        lam = max(lam / 10.0, 1e-15)
        if decrease < tol:
            status = "converged"
            break
    c0, branches = _branches_from_coef(fit.coef, r, M)
    prov = dict(init.provenance)
    model = DecoupledModel(V, branches, c0, init.cfg, prov)
    tag = initializer or prov.get("init_mode", "unknown")
    return model, SlsReport(costs, it, tag, status, fit.cond, notes)


def random_init(tab: RegressorTable, r: int, M: int, cfg: NarxConfig, seed: int) -> DecoupledModel:
    """Standard-normal mixing matrix, normalized, with least-squares branches."""
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((cfg.m, r))
    return model_from_mixing(V, tab, M, cfg, {"init_mode": "random", "seeds": {"init": seed}})


@dataclass
class DecoupleOptions:
    """Numerical options for initialization and refinement."""

    n_hessian: int = 4096
    als_restarts: int = 5
    als_max_iter: int = 3000
    cpd_max_iter: int = 200
    sls_max_iter: int = 200
    sls_tol: float = 1e-10
    budget_bytes: int = DEFAULT_BUDGET_BYTES
    seed: int = 0
    standardize: bool = True
    random_restarts: int = 100

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _degenerate_mixing(p: CoupledPolynomial, Z, r, seed) -> np.ndarray:
    """Mixing guess when the Hessian vanishes: mean gradient plus complement."""
    g = p.gradient(Z).mean(axis=0)
    m = p.input_dim
    rng = np.random.default_rng(seed)
    if not np.any(g):
        return rng.standard_normal((m, r))
    V = np.empty((m, r))
    V[:, 0] = g / np.linalg.norm(g)
    for l in range(1, r):
        v = rng.standard_normal(m)
        v -= V[:, :l] @ (V[:, :l].T @ v)
        V[:, l] = v
    return V


def init_from_cpd(
    p: CoupledPolynomial,
    tab: RegressorTable,
    r: int,
    M: int,
    mode: str = "structured",
    cfg: NarxConfig | None = None,
    opts: DecoupleOptions | None = None,
) -> tuple[DecoupledModel, dict]:
    """Initial decoupled model from a CPD of the Hessians of ``p``.

    The Hessians are evaluated at (at most ``opts.n_hessian``, uniformly
    strided) identification regressors, factorized (plain shared-mode ALS or
    polynomial-structured), and the resulting ``V`` gets least-squares
    branches on the full table.
    """
    opts = opts or DecoupleOptions()
    cfg = cfg or NarxConfig(tab.Z.shape[1], 0, 0, M)
    if mode not in ("structured", "unstructured"):
        raise ValueError(f"unknown CPD mode {mode!r}")
    sub = tab.subsample(opts.n_hessian)
    info: dict = {"mode": mode, "hessian_points": len(sub), "subsampled": len(sub) < len(tab)}
    if mode == "structured":
        info["jacobian_elements"] = check_jacobian_budget(len(sub), r, cfg.m, M, opts.budget_bytes)
    T = build_hessian_tensor(p, sub.Z)
    scale = float(np.abs(p.coefs).max(initial=0.0)) or 1.0
    if T.norm() <= 1e-12 * scale * np.sqrt(T.data.size):
        V = _degenerate_mixing(p, sub.Z, r, opts.seed)
        info["note"] = "Hessian vanishes; mixing initialized from the mean gradient"
    else:
        als = cpd_als(T, r, max_iter=opts.als_max_iter, restarts=opts.als_restarts, seed=opts.seed)
        info["als_error"] = als.error
        V = als.factors.V
        if mode == "structured" and M >= 2:
            st = cpd_structured(
                T, sub.Z, r, M, V0=V, max_iter=opts.cpd_max_iter, budget_bytes=opts.budget_bytes
            )
            info.update(structured_error=st.rel_error, structured_status=st.status,
                        structured_iterations=st.iterations)
            V = st.V
    prov = {"init_mode": f"cpd_{mode}" if mode == "structured" else "cpd", "seeds": {"cpd": opts.seed}}
    return model_from_mixing(V, tab, M, cfg, prov), info


def _scaling(tab: RegressorTable, cfg: NarxConfig) -> tuple[np.ndarray, float]:
    def rms(a):
        v = float(np.sqrt(np.mean(a * a))) if a.size else 1.0
        return v if v > 0 else 1.0

    s_y = rms(tab.target)
    s_u = rms(tab.Z[:, cfg.n_y :])
    D = np.array([1.0 / s_y] * cfg.n_y + [1.0 / s_u] * cfg.n_u)
    return D, s_y


def _unscale(model: DecoupledModel, D: np.ndarray, s_y: float) -> DecoupledModel:
    branches = [UnivariatePoly(g.coeffs * s_y) for g in model.branches]
    raw = DecoupledModel(D[:, None] * model.V, branches, model.c0 * s_y, model.cfg, model.provenance)
    return raw.normalized()


def _prune(model: DecoupledModel, notes: list[str]) -> DecoupledModel:
    norms = np.array([np.linalg.norm(g.coeffs) for g in model.branches])
    total = float(np.linalg.norm(norms))
    keep = [i for i, n in enumerate(norms) if n >= 1e-12 * total]
    if len(keep) == model.r or not keep:
        return model
    notes.append(f"dropped {model.r - len(keep)} dead branch(es)")
    return DecoupledModel(model.V[:, keep], [model.branches[i] for i in keep], model.c0,
                          model.cfg, model.provenance)


def decouple(
    p: CoupledPolynomial,
    tab: RegressorTable,
    cfg: NarxConfig,
    r: int,
    M: int,
    init_mode: str = "structured",
    opts: DecoupleOptions | None = None,
) -> tuple[DecoupledModel, dict]:
    """Initialize and refine a decoupled model for the coupled model ``p``.

    ``init_mode`` is ``"structured"``, ``"unstructured"`` or ``"random"``.
    With ``opts.standardize`` the regressors and target are scaled to unit
    RMS internally; the returned model is in the original units.
    """
    opts = opts or DecoupleOptions()
    if opts.standardize:
        D, s_y = _scaling(tab, cfg)
    else:
        D, s_y = np.ones(cfg.m), 1.0
    tab_s = RegressorTable(tab.Z * D, tab.target / s_y, tab.origin_index)
    p_s = p.scaled(D, s_y)
    report: dict = {"init_mode": init_mode, "r": r, "M": M, "scaling": {"regressors": D.tolist(), "output": s_y}}
    if init_mode == "random":
        # independent restarts; the one with the lowest final cost is kept
        best = None
        runs = []
        for k in range(max(1, opts.random_restarts)):
            seed = opts.seed + k
            try:
                cand = random_init(tab_s, r, M, cfg, seed)
            except Exception as exc:
                raise StageError("initialize", exc) from exc
            try:
                out = refine_sls(cand, tab_s, max_iter=opts.sls_max_iter, tol=opts.sls_tol, seed=seed)
            except Exception as exc:
                raise StageError("refine", exc) from exc
            runs.append({"seed": seed, "iterations": out[1].iterations, "final_cost": out[1].costs[-1]})
            if best is None or out[1].costs[-1] < best[2][1].costs[-1]:
                best = (cand, seed, out)
        init, best_seed, (model_s, sls) = best
        report["init"] = {"mode": "random", "restarts": runs, "best_seed": best_seed}
    else:
        try:
            init, info = init_from_cpd(p_s, tab_s, r, M, init_mode, cfg, opts)
            report["init"] = info
        except Exception as exc:
            raise StageError("initialize", exc) from exc
        try:
            model_s, sls = refine_sls(init, tab_s, max_iter=opts.sls_max_iter, tol=opts.sls_tol, seed=opts.seed)
        except Exception as exc:
            raise StageError("refine", exc) from exc
    report["init_cost"] = float(np.sum((tab_s.target - init.predict(tab_s.Z)) ** 2)) * s_y**2
    init_raw = _unscale(init, D, s_y)
    notes = list(sls.notes)
    model = _prune(_unscale(model_s, D, s_y), notes)
    model.provenance = {
        "tool_version": f"v{__version__}",
        "init_mode": init.provenance.get("init_mode", init_mode),
        "seeds": {"init": report["init"].get("best_seed", opts.seed)},
    }
    sls.costs = [c * s_y**2 for c in sls.costs]
    report["sls"] = sls.to_dict()
    report["notes"] = notes
    report["init_model"] = init_raw.to_dict()
    return model, report


def _metrics_or_unstable(model, d: Dataset, cfg: NarxConfig) -> dict:
    tab = build_regressors(d, cfg)
    pred = compute_metrics(tab.target, predict_one_step(model, d, cfg))
    sim = simulate_free_run(model, d, cfg)
    out = {"prediction": pred.to_dict()}
    if sim.unstable:
        out["simulation"] = {"status": "unstable", "segments": sim.segment_status}
    else:
        out["simulation"] = {"status": "ok", **compute_metrics(tab.target, sim.y).to_dict()}
    return out


def evaluate_model(model, d: Dataset, cfg: NarxConfig | None = None) -> dict:
    """FIT and e_RMS in prediction and free-run simulation."""
    cfg = cfg or model.cfg
    return _metrics_or_unstable(model, d, cfg)


def run_algorithm1(
    d: Dataset,
    cfg: NarxConfig,
    r: int,
    M: int,
    init_mode: str = "structured",
    selection: Frols | None = None,
    opts: DecoupleOptions | None = None,
    validation: Dataset | None = None,
) -> tuple[DecoupledModel, dict]:
    """Full pipeline: coupled fit, Hessian CPD initialization, SLS refinement.

    Metrics are computed on ``validation`` when given, otherwise on ``d``.
    """
    opts = opts or DecoupleOptions()
    try:
        tab = build_regressors(d, cfg)
        fit = fit_full_pnarx(tab, cfg, selection)
    except Exception as exc:
        raise StageError("fit", exc) from exc
    coupled = fit.polynomial
    model, dreport = decouple(coupled, tab, cfg, r, M, init_mode, opts)
    target = validation if validation is not None else d
    init_model = DecoupledModel.from_dict(dreport["init_model"])
    tab_eval = build_regressors(target, cfg)
    report = {
        "config": cfg.to_dict(),
        "r": r,
        "M": M,
        "init_mode": init_mode,
        "selection": selection.to_dict() if selection else None,
        "evaluated_on": "validation" if validation is not None else "identification",
        "coupled": {
            "n_candidates": fit.n_candidates,
            "n_params": coupled.n_terms,
            "condition": fit.condition,
            "metrics": _metrics_or_unstable(coupled, target, cfg),
        },
        "initializer": {
            "prediction": compute_metrics(tab_eval.target, init_model.predict(tab_eval.Z)).to_dict()
        },
        "decoupled": {"n_params": model.n_params, "metrics": _metrics_or_unstable(model, target, cfg)},
        "decouple": dreport,
    }
    return model, report


def branch_curves(model: DecoupledModel, Z, n_points: int = 201) -> list[dict]:
    """Per-branch nonlinearity over the observed input range, linear term removed.

    Inputs are mapped to [-1, 1]; outputs are divided by their largest
    magnitude. The model itself is left untouched.
    """
    X = model.branch_inputs(Z)
    out = []
    for i, g in enumerate(model.branches):
        lo, hi = float(X[:, i].min()), float(X[:, i].max())
        x = np.linspace(lo, hi, n_points)
        y = g(x) - g.coeffs[0] * x
        peak = float(np.abs(y).max())
        xn = np.linspace(-1.0, 1.0, n_points) if hi > lo else np.zeros(n_points)
        out.append({"branch": i, "x": x, "x_normalized": xn, "g_nonlinear": y,
                    "g_normalized": y / peak if peak > 0 else y})
    return out


def filter_responses(model: DecoupledModel, sample_rate_hz: float = 1.0, n_freq: int = 512) -> list[dict]:
    """Magnitude responses of each branch's output-lag and input-lag FIR taps."""
    cfg = model.cfg
    w = np.linspace(0.0, np.pi, n_freq)
    y_lags = np.arange(1, cfg.n_y + 1)
    u_lags = cfg.n_k + np.arange(cfg.n_u)
    out = []
    for i in range(model.r):
        hy = model.V[: cfg.n_y, i]
        hu = model.V[cfg.n_y :, i]
        Hy = np.exp(-1j * np.outer(w, y_lags)) @ hy if cfg.n_y else np.zeros(n_freq)
        Hu = np.exp(-1j * np.outer(w, u_lags)) @ hu if cfg.n_u else np.zeros(n_freq)
        out.append({"branch": i, "omega_rad_per_sample": w, "freq_hz": w * sample_rate_hz / (2 * np.pi),
                    "mag_output_filter": np.abs(Hy), "mag_input_filter": np.abs(Hu)})
    return out
