"""Airy functions and the Ablowitz-Segur branch of Painleve II, u'' = s u + 2 u^3.

For Stokes data (p, -p, 0) with p = i kappa, |kappa| < 1, the relevant
solution is real, bounded, and decays like beta Ai(s) as s -> +inf with
|beta| = |kappa|.  It is produced by integrating backwards from s_max with
Airy boundary data; backward integration is the stable direction for the
decaying branch.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.special import airy as _scipy_airy

from .errors import DivergenceError, DomainError, UnsupportedStokesDataError

AIRY_RANGE = (-15.0, 15.0)
KAPPA_MAX = 0.95
DIVERGENCE_BOUND = 1e3

DEFAULT_S_MIN = -10.0
DEFAULT_S_MAX = 8.0
DEFAULT_STEP = 0.01
DEFAULT_TOL = 1e-10


def airy(s):
    """(Ai(s), Ai'(s)) on the supported interval [-15, 15]."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < AIRY_RANGE[0]) or np.any(s_arr > AIRY_RANGE[1]):
        raise DomainError(f"airy supported on {AIRY_RANGE}, got {s}")
    ai, aip, _, _ = _scipy_airy(s_arr)
    if s_arr.ndim == 0:
        return float(ai), float(aip)
    return ai, aip


@dataclass(frozen=True)
class StokesData:
    """Painleve II monodromy parameters subject to r = p + q + p q r."""

    p: complex
    q: complex
    r: complex = 0.0

    def __post_init__(self):
        for name in ("p", "q", "r"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        defect = abs(self.r - (self.p + self.q + self.p * self.q * self.r))
        if defect > 1e-14:
            raise ValueError(f"Stokes constraint r = p + q + pqr violated by {defect:.3e}")

    @classmethod
    def from_reflection(cls, r_T1: complex) -> "StokesData":
        """p = r(T_1), q = -r(T_1), r = 0, for purely imaginary r(T_1)."""
        return cls(r_T1, -r_T1, 0.0)

    @property
    def kappa(self) -> float:
        """Imaginary part of p (p = i kappa in the supported family)."""
        return self.p.imag

    def check_supported(self, atol: float = 1e-12) -> None:
        if abs(self.q + self.p) > atol or abs(self.r) > atol:
            raise UnsupportedStokesDataError("only (p, -p, 0) data are supported")
        if abs(self.p.real) > atol * max(1.0, abs(self.p)):
            raise UnsupportedStokesDataError("p must be purely imaginary")


@dataclass(frozen=True, eq=False)
class Painleve2Solution:
    s_grid: np.ndarray
    u_values: np.ndarray
    du_values: np.ndarray
    beta: float
    kappa: float
    sign: int = 1
    tol: float = DEFAULT_TOL

    @cached_property
    def _spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.s_grid, self.u_values, self.du_values)

    @property
    def s_min(self) -> float:
        return float(self.s_grid[0])

    @property
    def s_max(self) -> float:
        return float(self.s_grid[-1])

    def residual(self) -> np.ndarray:
        """Defect of the first-order system (u' = v, v' = s u + 2u^3) on interior nodes.

        Derivatives come from the 4th-order central stencil applied to the
        stored u and u' values; a first-derivative stencil amplifies the
        solver's own rounding far less than a second-derivative one.
        """
        s, u, v = self.s_grid, self.u_values, self.du_values
        h = s[1] - s[0]

        def d1(f):
            return (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)

        core_u, core_v = u[2:-2], v[2:-2]
        eq = np.abs(d1(v) - s[2:-2] * core_u - 2 * core_u**3)
        consistency = np.abs(d1(u) - core_v)
        return np.maximum(eq, consistency)


def eval_u(sol: Painleve2Solution, s):
    """Cubic Hermite interpolation of the stored solution (exact at nodes)."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < sol.s_min) or np.any(s_arr > sol.s_max):
        raise DomainError(f"s outside [{sol.s_min}, {sol.s_max}]")
    out = sol._spline(s_arr)
    return float(out) if out.ndim == 0 else out


def solve_p2(
    stokes: StokesData,
    s_min: float = DEFAULT_S_MIN,
    s_max: float = DEFAULT_S_MAX,
    tol: float = DEFAULT_TOL,
    *,
    step: float = DEFAULT_STEP,
    sign: int = 1,
) -> Painleve2Solution:
    """Ablowitz-Segur solution with u ~ beta Ai(s), beta = sign * kappa, at s_max."""
    stokes.check_supported()
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if s_max < 6 or s_min < -12 or s_min >= s_max:
        raise DomainError("need s_max >= 6 and -12 <= s_min < s_max")
    kappa = stokes.kappa
    if abs(kappa) > KAPPA_MAX:
        raise UnsupportedStokesDataError(f"|kappa| = {abs(kappa):.4g} exceeds {KAPPA_MAX}")

    count = int(round((s_max - s_min) / step)) + 1
    grid = np.linspace(s_min, s_max, count)
    beta = float(sign * kappa)
    if beta == 0.0:
        zeros = np.zeros_like(grid)
        return Painleve2Solution(grid, zeros, zeros.copy(), 0.0, kappa, sign, tol)

    ai, aip = airy(s_max)

    def rhs(s, y):
        return [y[1], s * y[0] + 2.0 * y[0] ** 3]

    def blowup(s, y):
        return DIVERGENCE_BOUND - abs(y[0])

    blowup.terminal = True

    sol = solve_ivp(
        rhs,
        (s_max, s_min),
        [beta * ai, beta * aip],
        method="DOP853",
        t_eval=grid[::-1],
        rtol=tol,
        atol=tol * abs(beta) * 1e-6,
        events=blowup,
    )
    if sol.status == 1 or not sol.success:
        raise DivergenceError(
            f"Painleve II integration diverged (kappa={kappa:.4g}); "
            "wrong branch or kappa too close to 1"
        )
    u = sol.y[0][::-1].copy()
    du = sol.y[1][::-1].copy()
    return Painleve2Solution(grid, u, du, beta, kappa, sign, tol)


def write_solution_csv(path: str | Path, sol: Painleve2Solution, header: dict | None = None) -> Path:
    path = Path(path)
    lines = [f"# beta={sol.beta:.17g}", f"# kappa={sol.kappa:.17g}", f"# sign={sol.sign}"]
    lines += [f"# {k}={v}" for k, v in (header or {}).items()]
    lines.append("s,u")
    lines += [f"{s:.17g},{u:.17g}" for s, u in zip(sol.s_grid, sol.u_values)]
    path.write_text("\n".join(lines) + "\n")
    return path
