"""Benchmark systems, excitation signals and benchmark-file parsing.

Simulators take a sampled input held constant over each sample interval
(zero-order hold) and integrate on an internal grid that is ``oversample``
times finer. The returned output is the displacement at the sample instants
``t_k = k * dt``, so ``y[0]`` is the initial displacement.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
from scipy.signal import chirp

from .decouple import DecoupledModel
from .errors import ConvergenceError, LayoutError, NumericalError
from .metrics import Metric, compute_metrics
from .narx import Dataset, NarxConfig, _read_csv_rows, infer_segments, simulate_free_run
from .poly import UnivariatePoly

__all__ = [
    "BoucWenParams",
    "simulate_boucwen",
    "DuffingParams",
    "simulate_duffing",
    "gen_multisine",
    "band_lines",
    "gen_swept_sine",
    "SilverBoxData",
    "parse_silverbox",
    "synthetic_truth",
    "simulate_truth",
    "synthetic_dataset",
    "boucwen_dataset",
    "Metric",
    "compute_metrics",
]

BOUCWEN_FS = 750.0
SILVERBOX_FS = 610.35


@dataclass(frozen=True)
class BoucWenParams:
    """Single-mass oscillator with Bouc-Wen hysteresis (SI units)."""

    m_L: float = 2.0
    c_L: float = 10.0
    k_L: float = 5e4
    alpha: float = 5e4
    beta: float = 1e3
    gamma: float = 0.8
    delta: float = -1.1
    nu: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


def _bw_rate(p: BoucWenParams, v: float, z: float) -> tuple[float, float, float]:
    """``z_dot`` and its partial derivatives with respect to ``v`` and ``z``."""
    az = abs(z)
    if p.nu == 1.0:
        zn, zn1 = az, 1.0
    else:
        zn = az**p.nu
        zn1 = az ** (p.nu - 1.0) if az > 0 else (0.0 if p.nu > 1 else np.inf)
    sz = np.sign(z)
    f = p.alpha * v - p.beta * (p.gamma * abs(v) * zn1 * z + p.delta * v * zn)
    df_dv = p.alpha - p.beta * (p.gamma * np.sign(v) * zn1 * z + p.delta * zn)
    df_dz = -p.beta * p.nu * zn1 * (p.gamma * abs(v) + p.delta * v * sz)
    return f, df_dv, df_dz


def simulate_boucwen(
    p: BoucWenParams,
    u,
    dt: float,
    beta_n: float = 0.25,
    gamma_n: float = 0.5,
    tol: float = 1e-10,
    max_newton: int = 50,
    oversample: int = 20,
    initial_state: tuple[float, float, float] = (0.0, 0.0, 0.0),
    return_state: bool = False,
):
    """Newmark integration of the Bouc-Wen oscillator.

    Parameters
    ----------
    p : BoucWenParams
    u : array_like
        Force samples (N), held constant over each interval.
    dt : float
        Sample interval in seconds.
    beta_n, gamma_n : float
        Newmark parameters; the defaults are the constant-average-acceleration
        scheme. The hysteresis state uses the same weighting ``gamma_n``.
    tol, max_newton : Newton tolerance on the scaled residual and iteration cap.
    oversample : int
        Internal steps per sample interval.
    initial_state : (y, y_dot, z)
    return_state : bool
        Also return the final ``(y, y_dot, z)``.

    Returns
    -------
    y : ndarray
        Displacement at the sample instants, ``y[0]`` being the initial one.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    if dt <= 0 or oversample < 1:
        raise ValueError("dt and oversample must be positive")
    if not np.all(np.isfinite(u)):
        raise ValueError("input contains non-finite values")
    h = dt / oversample
    m, c, k = p.m_L, p.c_L, p.k_L
    y0, v0, z0 = (float(s) for s in initial_state)
    out = np.empty(u.size)
    b1, g1 = beta_n * h * h, gamma_n * h
    fscale = max(np.max(np.abs(u), initial=0.0), k * 1e-6, 1.0)
    zscale = max(abs(p.alpha) * h, 1e-300)
    for n in range(u.size):
        out[n] = y0
        un = u[n]
        # the force jumps here; restart the acceleration from the new load
        a0 = (un - c * v0 - k * y0 - z0) / m
        for _ in range(oversample):
            f0 = _bw_rate(p, v0, z0)[0]
            yp = y0 + h * v0 + (0.5 - beta_n) * h * h * a0
            vp = v0 + (1.0 - gamma_n) * h * a0
            zp = z0 + (1.0 - gamma_n) * h * f0
            a1, z1 = a0, z0
            for it in range(max_newton):
                y1 = yp + b1 * a1
                v1 = vp + g1 * a1
                f1, dfv, dfz = _bw_rate(p, v1, z1)
                r1 = m * a1 + c * v1 + k * y1 + z1 - un
                r2 = z1 - zp - g1 * f1
                if abs(r1) <= tol * fscale and abs(r2) <= tol * zscale * max(1.0, abs(z1) / zscale):
                    break
                J11 = m + c * g1 + k * b1
                J12 = 1.0
                J21 = -g1 * dfv * g1
                J22 = 1.0 - g1 * dfz
                det = J11 * J22 - J12 * J21
                da = (r1 * J22 - J12 * r2) / det
                dz = (J11 * r2 - J21 * r1) / det
                a1 -= da
                z1 -= dz
            else:
                raise ConvergenceError(f"Newton did not converge at sample {n}")
            y0, v0, z0, a0 = yp + b1 * a1, vp + g1 * a1, z1, a1
        if not np.isfinite(y0):
            raise NumericalError(f"non-finite state at sample {n}")
    if return_state:
        return out, (y0, v0, z0)
    return out


@dataclass(frozen=True)
class DuffingParams:
    """``m y'' + d y' + (a + b y^2) y = u``.

    The defaults are synthetic, chosen to put the linear resonance near
    60 Hz with about 5 % damping, which suits a 610.35 Hz sample rate.
    """

    m: float = 7.0e-6
    d: float = 2.6e-4
    a: float = 1.0
    b: float = 30.0

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError("mass must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def simulate_duffing(
    p: DuffingParams,
    u: np.ndarray | Callable[[float], float],
    dt: float,
    n_samples: int | None = None,
    oversample: int = 10,
    initial_state: tuple[float, float] = (0.0, 0.0),
) -> np.ndarray:
    """Fixed-step RK4 integration of the forced Duffing oscillator.

    ``u`` is either an array of samples (zero-order hold, ``n_samples``
    defaults to its length) or a function of continuous time.
    """
    if dt <= 0 or oversample < 1:
        raise ValueError("dt and oversample must be positive")
    if callable(u):
        if n_samples is None:
            raise ValueError("n_samples is required for a callable input")
        force = u
        N = int(n_samples)
    else:
        samples = np.asarray(u, dtype=float).reshape(-1)
        N = samples.size if n_samples is None else int(n_samples)
        force = None
    h = dt / oversample
    y, v = (float(s) for s in initial_state)
    inv_m = 1.0 / p.m

    def acc(y, v, f):
        return (f - p.d * v - (p.a + p.b * y * y) * y) * inv_m

    out = np.empty(N)
    with np.errstate(over="raise", invalid="raise"):
        try:
            for n in range(N):
                out[n] = y
                for s in range(oversample):
                    t = n * dt + s * h
                    if force is None:
                        f0 = f1 = f2 = samples[n]
                    else:
                        f0, f1, f2 = force(t), force(t + 0.5 * h), force(t + h)
                    k1y, k1v = v, acc(y, v, f0)
                    k2y, k2v = v + 0.5 * h * k1v, acc(y + 0.5 * h * k1y, v + 0.5 * h * k1v, f1)
                    k3y, k3v = v + 0.5 * h * k2v, acc(y + 0.5 * h * k2y, v + 0.5 * h * k2v, f1)
                    k4y, k4v = v + h * k3v, acc(y + h * k3y, v + h * k3v, f2)
                    y += h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
                    v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
                if not np.isfinite(y):
                    raise FloatingPointError
        except FloatingPointError:
            raise NumericalError(f"Duffing state overflowed at sample {n}; excitation too large") from None
    return out


def band_lines(n_period: int, fs: float, f_lo: float, f_hi: float) -> np.ndarray:
    """Harmonic indices ``k`` with ``f_lo <= k fs / n_period <= f_hi`` (DC and Nyquist excluded)."""
    k = np.arange(1, (n_period + 1) // 2)
    f = k * fs / n_period
    return k[(f >= f_lo) & (f <= f_hi)]


def gen_multisine(
    n_period: int,
    harmonics: Iterable[int],
    rms_target: float = 1.0,
    odd_only: bool = False,
    seed: int = 0,
    n_periods: int = 1,
) -> np.ndarray:
    """Random-phase multisine with flat amplitude on the chosen lines.

    ``u(t) = A sum_k cos(2 pi k t / n_period + phi_k)`` with phases uniform
    on ``[0, 2 pi)``, scaled so one period has RMS ``rms_target``. The
    period is repeated ``n_periods`` times.
    """
    lines = np.array(sorted(set(int(k) for k in harmonics)), dtype=int)
    if odd_only:
        lines = lines[lines % 2 == 1]
    if lines.size == 0:
        raise ValueError("empty harmonic set")
    if lines[0] < 1 or 2 * lines[-1] >= n_period:
        raise ValueError("harmonics must lie strictly between DC and Nyquist")
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2 * np.pi, lines.size)
    spectrum = np.zeros(n_period // 2 + 1, dtype=complex)
    spectrum[lines] = np.exp(1j * phases) * (n_period / 2)
    u = np.fft.irfft(spectrum, n=n_period)
    u *= rms_target / np.sqrt(np.mean(u * u))
    return np.tile(u, n_periods)


def gen_swept_sine(
    f_start: float,
    f_end: float,
    duration: float,
    fs: float,
    amplitude: float = 1.0,
    method: str = "linear",
) -> np.ndarray:
    """Constant-amplitude sine sweep sampled at ``fs``."""
    if duration <= 0 or fs <= 0:
        raise ValueError("duration and fs must be positive")
    t = np.arange(int(round(duration * fs))) / fs
    return amplitude * chirp(t, f0=f_start, t1=duration, f1=f_end, method=method)


@dataclass
class SilverBoxData:
    validation: Dataset
    identification: Dataset
    test: Dataset
    realizations: list[tuple[int, int]]


def parse_silverbox(
    path,
    n_validation: int = 40000,
    n_realizations: int = 10,
    n_test: int = 1,
    min_zero_run: int = 100,
    zero_tol: float = 0.0,
    min_realization: int = 1000,
    sample_rate_hz: float = SILVERBOX_FS,
) -> SilverBoxData:
    """Split a Silver-Box record into validation, identification and test parts.

    The file is CSV with a header row; the input and output columns are
    ``u``/``y`` or ``V1``/``V2`` (the benchmark's own naming). The first
    ``n_validation`` samples are the filtered-noise validation block. The
    remainder holds multisine realizations separated by runs of at least
    ``min_zero_run`` zero inputs (``|u| <= zero_tol``); the last ``n_test``
    realizations are held out for testing.
    """
    path = Path(path)
    try:
        header, rows = _read_csv_rows(path)
    except OSError as exc:
        raise LayoutError(f"{path}: {exc}") from exc
    cols = [h.strip().lower() for h in header]
    for iu, iy in (("u", "y"), ("v1", "v2")):
        if iu in cols and iy in cols:
            u = rows[:, cols.index(iu)]
            y = rows[:, cols.index(iy)]
            break
    else:
        raise LayoutError(f"{path}: need columns u,y or V1,V2, got {header}")
    if u.size <= n_validation:
        raise LayoutError(f"{path}: only {u.size} samples, validation block needs {n_validation}")
    rest_u = u[n_validation:]
    segs = infer_segments(rest_u, min_zero_run=min_zero_run, zero_tol=zero_tol)
    segs = [(a + n_validation, b + n_validation) for a, b in segs if b - a >= min_realization]
    if len(segs) != n_realizations:
        raise LayoutError(f"{path}: found {len(segs)} realizations, expected {n_realizations}")
    n_id = n_realizations - n_test
    return SilverBoxData(
        validation=Dataset(u[:n_validation], y[:n_validation], sample_rate_hz),
        identification=Dataset(u, y, sample_rate_hz, segs[:n_id]),
        test=Dataset(u, y, sample_rate_hz, segs[n_id:]),
        realizations=segs,
    )


def synthetic_truth() -> DecoupledModel:
    """Ground-truth decoupled model (n_u=2, n_y=2, n_k=0, r=2, M=3) used for recovery tests."""
    cfg = NarxConfig(n_u=2, n_y=2, n_k=0, degree=3)
    V = np.array(
        [
            [0.60, -0.30],
            [-0.20, 0.25],
            [0.70, 0.50],
            [0.33, -0.78],
        ]
    )
    branches = [UnivariatePoly([0.8, 0.25, -0.12]), UnivariatePoly([0.6, -0.3, 0.1])]
    return DecoupledModel(V, branches, 0.05, cfg, {"init_mode": "truth"})


def simulate_truth(model, u: np.ndarray) -> np.ndarray:
    """Noise-free output of a NARX model driven by ``u`` from zero initial conditions."""
    cfg = model.cfg
    d = Dataset(np.asarray(u, dtype=float), np.zeros(len(u)))
    sim = simulate_free_run(model, d, cfg, y_scale=1.0, blowup_factor=1e6)
    if sim.unstable:
        raise NumericalError("ground-truth model is unstable for this input")
    return np.concatenate([np.zeros(cfg.lag), sim.y])


def synthetic_dataset(
    n: int = 4000,
    snr_db: float | None = 40.0,
    seed: int = 0,
    truth: DecoupledModel | None = None,
    rms: float = 0.5,
    n_transient: int = 200,
) -> tuple[Dataset, Dataset]:
    """Multisine-driven record from a decoupled ground truth.

    Returns ``(noisy, clean)`` datasets sharing the input. The noise is white
    Gaussian, added to the output with standard deviation
    ``std(y) * 10**(-snr_db / 20)``; ``snr_db=None`` gives identical records.
    A transient of ``n_transient`` samples is simulated and discarded.
    """
    truth = truth or synthetic_truth()
    rng = np.random.default_rng(seed)
    lines = np.arange(1, n // 4)
    u = gen_multisine(n, lines, rms, seed=int(rng.integers(2**31)))
    u_full = np.concatenate([u[-n_transient:], u]) if n_transient else u
    y = simulate_truth(truth, u_full)[n_transient:]
    clean = Dataset(u, y)
    if snr_db is None:
        return clean, clean
    sigma = float(np.std(y)) * 10 ** (-snr_db / 20)
    return Dataset(u, y + sigma * rng.standard_normal(n)), clean


def boucwen_dataset(
    rms: float = 55.0,
    seed: int = 0,
    n_period: int = 8192,
    n_periods: int = 1,
    fs: float = BOUCWEN_FS,
    f_band: tuple[float, float] = (5.0, 150.0),
    n_transient_periods: int = 1,
    params: BoucWenParams | None = None,
    oversample: int = 20,
) -> Dataset:
    """Random-phase multisine excitation of the Bouc-Wen system.

    One extra period is simulated first and dropped so the record starts in
    steady state.
    """
    params = params or BoucWenParams()
    lines = band_lines(n_period, fs, *f_band)
    u = gen_multisine(n_period, lines, rms, seed=seed, n_periods=n_periods + n_transient_periods)
    y = simulate_boucwen(params, u, 1.0 / fs, oversample=oversample)
    cut = n_transient_periods * n_period
    return Dataset(u[cut:], y[cut:], fs)
