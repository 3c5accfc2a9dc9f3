"""Evaluated long-time asymptotics: time shift, Painleve II front formula, decay fits.

Along the wavefront band 2t - M t^{1/3} < n < 2t + M' t^{1/3},

    R_n(t) ~ exp(2p' - i pi/4) alpha' (3t')^{-1/3} u(4q' / 3^{1/3}),

with t' = t - t0, p' = i(-4t' + pi n)/4, alpha' = [12t'/(6t' - n)]^{1/3},
q' = -2^{-4/3} 3^{1/3} (6t' - n)^{-1/3} (2t' - n), and u the Painleve II
solution for Stokes data (r(T_1, t0), -r(T_1, t0), 0).  The error is
O(t'^{-2/3}).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from . import painleve
from .errors import DegenerateFitError, OutsideRegionError, ZeroReflectionError
from .lattice import DEFAULT_DT, DEFAULT_PAD_FACTOR, MIN_PAD, LatticeState, integrate
from .phase import DEFAULT_M, DEFAULT_M_PRIME, DEFAULT_V0, classify_region

REGION_B_ERROR_ORDER = -2.0 / 3.0
_HALF_PI = 0.5 * math.pi


def time_shift(r_T1: complex) -> float:
    """Smallest t0 in [0, pi/2) with arg r(T_1) - 2 t0 - pi/2 in pi Z."""
    if r_T1 == 0:
        raise ZeroReflectionError("r(T_1) = 0: the leading coefficient vanishes")
    t0 = math.fmod((np.angle(r_T1) - _HALF_PI) / 2.0, _HALF_PI)
    if t0 < 0:
        t0 += _HALF_PI
    # arg exactly on a congruence point can round to just below pi/2
    if _HALF_PI - t0 < 1e-12:
        t0 = 0.0
    return t0


@dataclass(frozen=True)
class RegionBInputs:
    n: int
    t: float
    t0: float
    r_T1: complex
    t_prime: float
    p_prime: complex
    alpha_prime: float
    q_prime: float
    kappa: float

    @property
    def painleve_argument(self) -> float:
        return 4.0 * self.q_prime / 3.0 ** (1.0 / 3.0)

    @property
    def shifted_reflection(self) -> complex:
        return self.r_T1 * np.exp(-2j * self.t0)


def region_b_inputs(n: int, t: float, r_T1: complex) -> RegionBInputs:
    t0 = 0.0 if r_T1 == 0 else time_shift(r_T1)
    tp = t - t0
    if tp <= 0:
        raise OutsideRegionError(f"t' = t - t0 = {tp:.4g} must be positive")
    if 6 * tp - n <= 0:
        raise OutsideRegionError("6t' - n must be positive")
    p_prime = 0.25j * (-4.0 * tp + math.pi * n)
    alpha_prime = (12.0 * tp / (6.0 * tp - n)) ** (1.0 / 3.0)
    q_prime = -(2.0 ** (-4.0 / 3.0)) * 3.0 ** (1.0 / 3.0) * (6.0 * tp - n) ** (-1.0 / 3.0) * (2.0 * tp - n)
    kappa = float((r_T1 * np.exp(-2j * t0)).imag)
    return RegionBInputs(n, float(t), t0, complex(r_T1), tp, p_prime, alpha_prime, q_prime, kappa)


class PainleveProvider:
    """kappa -> Painleve2Solution, cached; solutions are shared read-only."""

    def __init__(
        self,
        sign: int,
        s_min: float = painleve.DEFAULT_S_MIN,
        s_max: float = painleve.DEFAULT_S_MAX,
        tol: float = painleve.DEFAULT_TOL,
        step: float = painleve.DEFAULT_STEP,
    ):
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        self.sign = sign
        self.s_min, self.s_max, self.tol, self.step = s_min, s_max, tol, step
        self._cache: dict[float, painleve.Painleve2Solution] = {}

    def __call__(self, kappa: float) -> painleve.Painleve2Solution:
        key = float(kappa)
        if key not in self._cache:
            stokes = painleve.StokesData.from_reflection(1j * key)
            self._cache[key] = painleve.solve_p2(
                stokes, self.s_min, self.s_max, self.tol, step=self.step, sign=self.sign
            )
        return self._cache[key]


SolutionProvider = Callable[[float], painleve.Painleve2Solution]


@dataclass(frozen=True)
class Prediction:
    n: int
    t: float
    value: complex
    region: str
    claimed_error_order: float
    inputs: RegionBInputs | None = None


def region_b_predict(
    n: int,
    t: float,
    r_T1: complex,
    sol_provider: SolutionProvider,
    *,
    V0: float = DEFAULT_V0,
    M: float = DEFAULT_M,
    M_prime: float = DEFAULT_M_PRIME,
) -> Prediction:
    """Leading-order R_n(t) on the wavefront band; |n| is used (n -> -n symmetry)."""
    region = classify_region(n, t, V0, M, M_prime)
    if region != "B":
        raise OutsideRegionError(f"(n={n}, t={t}) lies in region {region}, not B")
    n_abs = abs(int(n))
    inputs = region_b_inputs(n_abs, t, r_T1)
    if inputs.kappa == 0.0:
        return Prediction(int(n), float(t), 0j, "B", REGION_B_ERROR_ORDER, inputs)
    sol = sol_provider(inputs.kappa)
    u = painleve.eval_u(sol, inputs.painleve_argument)
    value = (
        np.exp(2.0 * inputs.p_prime - 0.25j * math.pi)
        * inputs.alpha_prime
        / (3.0 * inputs.t_prime) ** (1.0 / 3.0)
        * u
    )
    return Prediction(int(n), float(t), complex(value), "B", REGION_B_ERROR_ORDER, inputs)


def region_b_band(t: float, M: float = DEFAULT_M, M_prime: float = DEFAULT_M_PRIME) -> np.ndarray:
    """Integer n strictly inside the wavefront band at time t."""
    w = t ** (1.0 / 3.0)
    lo = math.floor(2 * t - M * w) + 1
    hi = math.ceil(2 * t + M_prime * w) - 1
    return np.arange(lo, hi + 1)


# ---------------------------------------------------------------------------
# decay fits


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    stderr: float
    log_prefactor: float
    count: int


def fit_decay_exponent(samples: Iterable[tuple[float, float]]) -> DecayFit:
    """Least-squares slope of log|R| against log t."""
    pts = np.asarray(list(samples), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 5 or pts.shape[1] != 2:
        raise DegenerateFitError("need at least 5 (t, |R|) samples")
    t, amp = pts[:, 0], pts[:, 1]
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise DegenerateFitError("times must be positive and increasing")
    if np.any(amp <= 0):
        raise DegenerateFitError("amplitudes must be positive for a log-log fit")
    return _linear_fit(np.log(t), np.log(amp))


def _linear_fit(x: np.ndarray, y: np.ndarray) -> DecayFit:
    if np.ptp(y) == 0.0:
        return DecayFit(0.0, 0.0, float(y[0]), len(x))
    res = stats.linregress(x, y)
    return DecayFit(float(res.slope), float(res.stderr), float(res.intercept), len(x))


def local_rms(state: LatticeState, n_center: int, half_width: int) -> float:
    """Hann-weighted RMS of |R_m| over |m - n_center| <= half_width.

    In the saddle-point cone two stationary points contribute with different
    wavenumbers, so |R_n| beats along a ray.  Averaging over a few beat
    periods removes the cross terms; the Hann taper makes that cancellation
    insensitive to the window length.
    """
    offsets = np.arange(-half_width, half_width + 1)
    weights = np.cos(0.5 * np.pi * offsets / (half_width + 1)) ** 2
    p = np.abs(state.at(n_center + offsets)) ** 2
    # palindromic summand: the result is bitwise invariant under n -> -n
    p = 0.5 * (p + p[::-1])
    return float(np.sqrt(np.sum(weights * p) / np.sum(weights)))


# ---------------------------------------------------------------------------
# region C


@dataclass(frozen=True, eq=False)
class RegionCReport:
    t: float
    n_values: np.ndarray
    abs_values: np.ndarray
    j: int
    weighted_sup: float
    slope: float | None
    slope_stderr: float | None
    rho: float | None

    @property
    def exponential(self) -> bool:
        return self.slope is not None and self.slope < 0


def region_c_check(
    initial: LatticeState,
    t: float,
    n_values: Sequence[int],
    j: int = 4,
    *,
    V0: float = DEFAULT_V0,
    dt: float = DEFAULT_DT,
    pad_factor: float = DEFAULT_PAD_FACTOR,
    state_at_t: LatticeState | None = None,
) -> RegionCReport:
    """sup |R_n(t)| n^j over ``n_values`` and a log-linear fit of |R_n| in n."""
    n_values = np.asarray(n_values, dtype=int)
    if n_values.size == 0 or np.any(np.abs(n_values) <= (2 + V0) * t):
        raise OutsideRegionError(f"all |n| must exceed (2 + V0) t = {(2 + V0) * t:g}")
    if state_at_t is None:
        state_at_t = simulate_to(initial, t, max(np.abs(n_values)), dt, pad_factor)
    amps = np.abs(state_at_t.at(n_values))
    weighted = float(np.max(amps * np.abs(n_values).astype(float) ** j))
    slope = stderr = rho = None
    if np.all(amps > 0) and n_values.size >= 3:
        fit = _linear_fit(np.abs(n_values).astype(float), np.log(amps))
        slope, stderr = fit.exponent, fit.stderr
        rho = math.exp(slope)
    return RegionCReport(float(t), n_values, amps, int(j), weighted, slope, stderr, rho)


def simulate_to(
    initial: LatticeState,
    t: float,
    reach: int,
    dt: float = DEFAULT_DT,
    pad_factor: float = DEFAULT_PAD_FACTOR,
) -> LatticeState:
    """Evolve on a window wide enough to cover both the front and index ``reach``."""
    core = initial.trimmed()
    pad = max(
        int(math.ceil(pad_factor * t)) + MIN_PAD,
        reach - core.n_max + MIN_PAD,
        reach + core.n_min + MIN_PAD,
    )
    return integrate(core.padded(pad), [t], dt).final


# ---------------------------------------------------------------------------
# CSV


def write_predictions_csv(
    path: str | Path, predictions: Iterable[Prediction], header: dict | None = None
) -> Path:
    path = Path(path)
    lines = [f"# {k}={v}" for k, v in (header or {}).items()]
    lines.append("n,t,region,re_pred,im_pred,abs_pred")
    for p in predictions:
        v = p.value
        lines.append(f"{p.n},{p.t:.17g},{p.region},{v.real:.17g},{v.imag:.17g},{abs(v):.17g}")
    path.write_text("\n".join(lines) + "\n")
    return path
