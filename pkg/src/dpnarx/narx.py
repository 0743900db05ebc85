"""Polynomial NARX regressors, coupled-model fitting and model evaluation.

The regressor vector at time ``t`` is::

    z(t) = [y(t-1), ..., y(t-n_y), u(t-n_k), ..., u(t-n_k-n_u+1)]

Datasets may consist of several segments (e.g. multisine realizations split
by runs of zeros); no regressor row ever reaches across a segment boundary.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import LayoutError, NumericalError, RankDeficientError
from .poly import CoupledPolynomial, monomial_exponents

__all__ = [
    "NarxConfig",
    "Dataset",
    "RegressorTable",
    "Frols",
    "PnarxFit",
    "SimulationResult",
    "build_regressors",
    "fit_full_pnarx",
    "frols_select",
    "count_pnarx_params",
    "count_monomials",
    "predict_one_step",
    "simulate_free_run",
    "infer_segments",
    "read_dataset_csv",
    "write_dataset_csv",
]


@dataclass(frozen=True)
class NarxConfig:
    """Lag structure and polynomial degree of a NARX model."""

    n_u: int
    n_y: int
    n_k: int = 0
    degree: int = 3

    def __post_init__(self):
        for name in ("n_u", "n_y", "n_k"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.n_u + self.n_y < 1:
            raise ValueError("need at least one regressor (n_u + n_y >= 1)")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")

    @property
    def m(self) -> int:
        return self.n_u + self.n_y

    @property
    def lag(self) -> int:
        """Number of leading samples per segment without a full regressor."""
        return max(self.n_y, self.n_k + self.n_u - 1 if self.n_u else 0)

    def to_dict(self) -> dict:
        return {"n_u": self.n_u, "n_y": self.n_y, "n_k": self.n_k, "degree": self.degree}

    @classmethod
    def from_dict(cls, d: dict) -> NarxConfig:
        return cls(int(d["n_u"]), int(d["n_y"]), int(d.get("n_k", 0)), int(d.get("degree", 3)))


@dataclass
class Dataset:
    """Input/output record, optionally split into independent segments.

    ``segments`` holds half-open ``(start, stop)`` index ranges; by default
    the whole record is one segment.
    """

    u: np.ndarray
    y: np.ndarray
    sample_rate_hz: float = 1.0
    segments: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float).reshape(-1)
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        if self.u.shape != self.y.shape:
            raise LayoutError("u and y must have equal length")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if not self.segments:
            self.segments = [(0, self.u.size)]
        self.segments = [(int(a), int(b)) for a, b in self.segments]
        prev = 0
        for a, b in self.segments:
            if not (prev <= a < b <= self.u.size):
                raise LayoutError(f"invalid or overlapping segment {(a, b)}")
            prev = b

    def __len__(self) -> int:
        return int(self.u.size)

    def select_segments(self, indices: Sequence[int]) -> Dataset:
        return Dataset(self.u, self.y, self.sample_rate_hz, [self.segments[i] for i in indices])


@dataclass
class RegressorTable:
    """Stacked regressors ``Z`` (one row per admissible time) and targets."""

    Z: np.ndarray
    target: np.ndarray
    origin_index: np.ndarray

    def __len__(self) -> int:
        return int(self.target.size)

    def subsample(self, n_max: int) -> RegressorTable:
        """Uniform-stride subset with at most ``n_max`` rows."""
        n = len(self)
        if n <= n_max:
            return self
        idx = np.floor(np.arange(n_max) * (n / n_max)).astype(int)
        return RegressorTable(self.Z[idx], self.target[idx], self.origin_index[idx])


def _regressor_row_block(u, y, cfg: NarxConfig, times: np.ndarray) -> np.ndarray:
    cols = [y[times - i] for i in range(1, cfg.n_y + 1)]
    cols += [u[times - cfg.n_k - i] for i in range(cfg.n_u)]
    return np.column_stack(cols)


def build_regressors(d: Dataset, cfg: NarxConfig) -> RegressorTable:
    """Regressor rows for every admissible time of every segment, in time order."""
    blocks, targets, origins = [], [], []
    for a, b in d.segments:
        if b - a <= cfg.lag:
            raise LayoutError(
                f"segment {(a, b)} has {b - a} samples; needs more than {cfg.lag}"
            )
        times = np.arange(a + cfg.lag, b)
        blocks.append(_regressor_row_block(d.u, d.y, cfg, times))
        targets.append(d.y[times])
        origins.append(times)
    if not blocks:
        raise LayoutError("dataset produced no regressor rows")
    return RegressorTable(np.vstack(blocks), np.concatenate(targets), np.concatenate(origins))


def count_pnarx_params(m: int, degree: int = 3) -> int:
    """Parameter count of a full cubic P-NARX model with ``m`` regressors."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if degree != 3:
        raise ValueError("closed form only covers degree 3; use count_monomials")
    return 1 + m + m * (m + 1) // 2 + m * (m + 1) * (m + 2) // 6


def count_monomials(m: int, degree: int) -> int:
    """Number of monomials of total degree <= ``degree`` in ``m`` variables."""
    return comb(m + degree, degree)


@dataclass(frozen=True)
class Frols:
    """Orthogonal forward regression term selection.

    Terms are added by decreasing error reduction ratio until the cumulative
    ratio reaches ``1 - err_threshold`` or ``max_terms`` terms are selected.
    """

    err_threshold: float = 1e-6
    max_terms: int | None = None

    def to_dict(self) -> dict:
        return {"err_threshold": self.err_threshold, "max_terms": self.max_terms}


@dataclass
class PnarxFit:
    polynomial: CoupledPolynomial
    residuals: np.ndarray
    condition: float
    n_candidates: int
    selected: list[int] | None = None
    err: list[float] | None = None

    def __iter__(self):
        # allows ``poly, residuals = fit_full_pnarx(...)``
        return iter((self.polynomial, self.residuals))


def _least_squares(X: np.ndarray, y: np.ndarray, max_condition: float) -> tuple[np.ndarray, float]:
    scale = np.sqrt((X * X).sum(axis=0))
    if (scale == 0).any():
        raise RankDeficientError("regression matrix has an all-zero column", np.inf)
    Xs = X / scale
    s = np.linalg.svd(Xs, compute_uv=False)
    cond = float(s[0] / s[-1]) if s[-1] > 0 else np.inf
    if cond > max_condition:
        raise RankDeficientError("rank-deficient regression", cond)
    theta, *_ = np.linalg.lstsq(Xs, y, rcond=None)
    return theta / scale, cond


def frols_select(
    P: np.ndarray, y: np.ndarray, err_threshold: float, max_terms: int | None = None
) -> tuple[list[int], list[float]]:
    """Classical Gram-Schmidt forward selection by error reduction ratio.

    Returns the selected column indices (selection order) and their ERR values.
    """
    n_cand = P.shape[1]
    max_terms = n_cand if max_terms is None else min(max_terms, n_cand)
    sigma = float(y @ y)
    if sigma == 0.0:
        raise NumericalError("no term passes the ERR threshold: target is identically zero")
    W = P.astype(float, copy=True)
    norms0 = (W * W).sum(axis=0)
    norms = norms0.copy()
    remaining = np.ones(n_cand, dtype=bool)
    selected: list[int] = []
    errs: list[float] = []
    while len(selected) < max_terms:
        alive = remaining & (norms > 1e-10 * norms0) & (norms0 > 0)
        if not alive.any():
            break
        idx = np.flatnonzero(alive)
        g = W[:, idx].T @ y
        err = g * g / (norms[idx] * sigma)
        best = int(idx[np.argmax(err)])
        selected.append(best)
        errs.append(float(err.max()))
        remaining[best] = False
        q = W[:, best].copy()
        qq = float(q @ q)
        rest = np.flatnonzero(remaining)
        if rest.size:
            alpha = (q @ W[:, rest]) / qq
            W[:, rest] -= np.outer(q, alpha)
            norms[rest] = (W[:, rest] ** 2).sum(axis=0)
        if sum(errs) >= 1.0 - err_threshold:
            break
    if not selected:
        raise NumericalError("no term passes the ERR threshold")
    return selected, errs


def fit_full_pnarx(
    tab: RegressorTable,
    cfg: NarxConfig,
    selection: Frols | None = None,
    max_condition: float = 1e12,
) -> PnarxFit:
    """Least-squares fit of a polynomial NARX model on a regressor table.

    With ``selection=None`` every monomial up to ``cfg.degree`` is used;
    with a :class:`Frols` policy the terms are chosen by forward regression
    and then re-estimated jointly.
    """
    if tab.Z.shape[1] != cfg.m:
        raise LayoutError("regressor table width does not match the configuration")
    exps = monomial_exponents(cfg.m, cfg.degree)
    P = CoupledPolynomial(cfg.m, cfg.degree, exps, np.zeros(len(exps))).design_matrix(tab.Z)
    if len(tab) <= P.shape[1] and selection is None:
        raise RankDeficientError(
            f"{len(tab)} rows cannot determine {P.shape[1]} coefficients", np.inf
        )
    selected = errs = None
    cols = np.arange(P.shape[1])
    if selection is not None:
        selected, errs = frols_select(P, tab.target, selection.err_threshold, selection.max_terms)
        cols = np.sort(np.array(selected))
        if len(tab) <= cols.size:
            raise RankDeficientError("fewer rows than selected terms", np.inf)
    theta, cond = _least_squares(P[:, cols], tab.target, max_condition)
    poly = CoupledPolynomial(cfg.m, cfg.degree, exps[cols], theta)
    residuals = tab.target - P[:, cols] @ theta
    return PnarxFit(poly, residuals, cond, P.shape[1], selected, errs)


def _predict_fn(model):
    return model.predict if hasattr(model, "predict") else model.evaluate


def _model_config(model, cfg: NarxConfig | None) -> NarxConfig:
    cfg = cfg if cfg is not None else getattr(model, "cfg", None)
    if cfg is None:
        raise ValueError("a NarxConfig is required for this model")
    return cfg


def predict_one_step(model, d: Dataset, cfg: NarxConfig | None = None) -> np.ndarray:
    """One-step-ahead prediction from measured past outputs.

    The returned vector is aligned with the rows of ``build_regressors(d, cfg)``.
    """
    cfg = _model_config(model, cfg)
    tab = build_regressors(d, cfg)
    return np.asarray(_predict_fn(model)(tab.Z), dtype=float)


@dataclass
class SimulationResult:
    """Free-run output aligned with the regressor rows of the dataset."""

    y: np.ndarray
    unstable: bool
    segment_status: list[str]

    @property
    def status(self) -> str:
        return "unstable" if self.unstable else "ok"


def simulate_free_run(
    model,
    d: Dataset,
    cfg: NarxConfig | None = None,
    y_init=None,
    y_scale: float | None = None,
    blowup_factor: float = 1e6,
) -> SimulationResult:
    """Recursive simulation feeding back the model's own outputs.

    Each segment starts from its first measured outputs; ``y_init`` (oldest
    first, length ``n_y``) replaces them for the first segment. A segment is
    aborted and flagged unstable when ``|y_hat|`` exceeds ``blowup_factor``
    times ``y_scale`` (default: standard deviation of the measured output);
    its remaining samples are NaN.
    """
    cfg = _model_config(model, cfg)
    f = _predict_fn(model)
    if y_init is not None:
        y_init = np.asarray(y_init, dtype=float).reshape(-1)
        if y_init.size != cfg.n_y:
            raise ValueError(f"y_init must have length n_y={cfg.n_y}")
    scale = float(np.std(d.y)) if y_scale is None else float(y_scale)
    limit = blowup_factor * (scale if scale > 0 else 1.0)
    out, status = [], []
    for s_idx, (a, b) in enumerate(d.segments):
        if b - a <= cfg.lag:
            raise LayoutError(f"segment {(a, b)} too short for lag {cfg.lag}")
        ysim = d.y[a:b].copy()
        lag = cfg.lag
        if s_idx == 0 and y_init is not None and cfg.n_y:
            ysim[lag - cfg.n_y : lag] = y_init
        useg = d.u[a:b]
        res = np.full(b - a - lag, np.nan)
        seg_status = "ok"
        with np.errstate(over="ignore", invalid="ignore"):
            for t in range(lag, b - a):
                z = np.empty((1, cfg.m))
                for i in range(cfg.n_y):
                    z[0, i] = ysim[t - 1 - i]
                for i in range(cfg.n_u):
                    z[0, cfg.n_y + i] = useg[t - cfg.n_k - i]
                val = float(f(z)[0])
                if not np.isfinite(val) or abs(val) > limit:
                    seg_status = "unstable"
                    break
                ysim[t] = val
                res[t - lag] = val
        out.append(res)
        status.append(seg_status)
    return SimulationResult(np.concatenate(out), "unstable" in status, status)


def infer_segments(u: np.ndarray, min_zero_run: int = 100, zero_tol: float = 0.0) -> list[tuple[int, int]]:
    """Split a record at runs of at least ``min_zero_run`` (near-)zero inputs.

    Samples inside such runs belong to no segment.
    """
    u = np.asarray(u, dtype=float)
    is_zero = np.abs(u) <= zero_tol
    sep = np.zeros(u.size, dtype=bool)
    i = 0
    n = u.size
    while i < n:
        if is_zero[i]:
            j = i
            while j < n and is_zero[j]:
                j += 1
            if j - i >= min_zero_run:
                sep[i:j] = True
            i = j
        else:
            i += 1
    segs = []
    i = 0
    while i < n:
        if sep[i]:
            i += 1
            continue
        j = i
        while j < n and not sep[j]:
            j += 1
        segs.append((i, j))
        i = j
    return segs


def _read_csv_rows(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise LayoutError(f"{path}: empty file")
    reader = csv.reader(lines)
    header = [h.strip().lower() for h in next(reader)]
    try:
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    except ValueError as exc:
        raise LayoutError(f"{path}: non-numeric entry ({exc})") from None
    if data.size == 0:
        raise LayoutError(f"{path}: no data rows")
    return header, data.reshape(len(data), -1)


def segments_sidecar(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".segments.json")


def read_dataset_csv(
    path,
    min_zero_run: int = 100,
    sidecar=None,
    sample_rate_hz: float | None = None,
) -> Dataset:
    """Read a ``t,u,y`` CSV file (lines starting with ``#`` are ignored).

    Segment bounds come from a sidecar JSON ``{"segments": [[a, b], ...]}``
    (default ``<file>.segments.json`` if present) or are inferred from runs of
    exact zeros in ``u``.
    """
    path = Path(path)
    header, data = _read_csv_rows(path)
    if header[:3] != ["t", "u", "y"] or data.shape[1] < 3:
        raise LayoutError(f"{path}: expected header 't,u,y', got {','.join(header)}")
    t, u, y = data[:, 0], data[:, 1], data[:, 2]
    side = Path(sidecar) if sidecar is not None else segments_sidecar(path)
    segments = None
    fs = sample_rate_hz
    if side.exists():
        meta = json.loads(side.read_text())
        segments = [tuple(s) for s in meta.get("segments", [])] or None
        fs = fs or meta.get("sample_rate_hz")
    if fs is None:
        fs = 1.0 / float(t[1] - t[0]) if t.size > 1 and t[1] > t[0] else 1.0
    if segments is None:
        segments = infer_segments(u, min_zero_run)
        if not segments:
            raise LayoutError(f"{path}: input is entirely zero")
    return Dataset(u, y, float(fs), segments)


def write_dataset_csv(path, d: Dataset, comment: str | None = None) -> None:
    """Write ``t,u,y`` rows; non-trivial segment bounds go into a sidecar JSON."""
    path = Path(path)
    t = np.arange(len(d)) / d.sample_rate_hz
    with open(path, "w", newline="") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write("t,u,y\n")
        for ti, ui, yi in zip(t, d.u, d.y):
            fh.write(f"{float(ti)!r},{float(ui)!r},{float(yi)!r}\n")
    side = segments_sidecar(path)
    if d.segments != [(0, len(d))]:
        side.write_text(
            json.dumps({"segments": [list(s) for s in d.segments], "sample_rate_hz": d.sample_rate_hz})
        )
    elif side.exists():
        side.unlink()
