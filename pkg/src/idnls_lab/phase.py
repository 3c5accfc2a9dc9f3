"""Phase function phi(z) = (i t / 2)(z - 1/z)^2 - n log z and its saddle geometry."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError

T1 = np.exp(-0.25j * np.pi)

# default region constants (V0, M, M')
DEFAULT_V0 = 0.5
DEFAULT_M = 5.0
DEFAULT_M_PRIME = 5.0

REGIONS = ("A", "B", "C", "gap")


def _check_z(z):
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("phi is singular at z = 0")
    return z


def _ret(x):
    return x[()] if np.ndim(x) == 0 else x


def phi(z, n: float, t: float):
    """Principal-branch phi; only exp(+-phi) is branch independent for integer n."""
    if t <= 0:
        raise DomainError("t must be positive")
    z = _check_z(z)
    return _ret(0.5j * t * (z - 1.0 / z) ** 2 - n * np.log(z))


def psi(z, n: float, t: float):
    return _ret(phi(z, n, t) / (1j * t))


def psi_derivatives(z, n: float, t: float):
    """(psi', psi'', psi''') in closed form."""
    z = _check_z(z)
    x = n / (1j * t)
    d1 = z - z**-3 - x / z
    d2 = 1 + 3 * z**-4 + x * z**-2
    d3 = -12 * z**-5 - 2 * x * z**-3
    return _ret(d1), _ret(d2), _ret(d3)


def phi_derivatives_at_T1(n: float, t: float) -> tuple[complex, complex, complex, complex]:
    """phi, phi', phi'', phi''' at T_1 = exp(-i pi/4)."""
    e = np.exp(0.25j * np.pi)
    return (
        0.25j * (-4 * t + np.pi * n),
        (2 * t - n) * e,
        1j * (-2 * t + n),
        (-12 * t + 2 * n) / e,
    )


def classify_region(
    n: float,
    t: float,
    V0: float = DEFAULT_V0,
    M: float = DEFAULT_M,
    M_prime: float = DEFAULT_M_PRIME,
) -> str:
    """Region tag for (n, t); the B band takes precedence, leftovers are "gap".

    Uses |n| (the lattice equation is invariant under n -> -n).
    """
    if not 0 < V0 < 2 or M <= 0 or M_prime <= 0 or t <= 0:
        raise ValueError("need 0 < V0 < 2, M, M' > 0 and t > 0")
    n = abs(n)
    width = t ** (1.0 / 3.0)
    if 2 * t - M * width < n < 2 * t + M_prime * width:
        return "B"
    if n <= (2 - V0) * t:
        return "A"
    if n > (2 + V0) * t:
        return "C"
    return "gap"


@dataclass(frozen=True)
class SaddleSet:
    saddles: tuple[complex, complex, complex, complex]
    coalesced: bool
    region: str
    ratio: float

    def residuals(self, n: float, t: float) -> np.ndarray:
        return np.abs(psi_derivatives(np.array(self.saddles), n, t)[0])


def saddle_points(
    n: float,
    t: float,
    V0: float = DEFAULT_V0,
    M: float = DEFAULT_M,
    M_prime: float = DEFAULT_M_PRIME,
    polish: bool = True,
) -> SaddleSet:
    """(S_1, S_2, S_3, S_4) with S_1 = e^{-i pi/4} A, S_3 = -S_1, S_4 = -S_2."""
    if t <= 0:
        raise DomainError("t must be positive")
    if n < 0:
        raise DomainError("use n >= 0; negative n follows by the reflection n -> -n")
    x = n / t
    e = np.exp(-0.25j * np.pi)
    if x <= 2:
        A = 0.5 * (np.sqrt(2 + x) - 1j * np.sqrt(2 - x))
        S1, S2 = e * A, e * np.conj(A)
    else:
        A = 0.5 * (np.sqrt(2 + x) + np.sqrt(x - 2))
        A_prime = 0.5 * (np.sqrt(2 + x) - np.sqrt(x - 2))
        S1, S2 = e * A, e * A_prime
    saddles = np.array([S1, S2, -S1, -S2], dtype=complex)
    coalesced = bool(n == 2 * t)
    if polish and not coalesced:
        d1, d2, _ = psi_derivatives(saddles, n, t)
        # near coalescence psi'' -> 0 and a Newton step would not help
        ok = np.abs(d2) > 1e-8
        saddles[ok] -= d1[ok] / d2[ok]
    return SaddleSet(
        tuple(complex(s) for s in saddles),
        coalesced,
        classify_region(n, t, V0, M, M_prime),
        float(x),
    )


def re_phi_polar(rho, theta, n: float, t: float):
    """Re phi at z = rho e^{i theta}: -(t/2)(rho^2 - rho^-2) sin 2theta - n log rho."""
    rho = np.asarray(rho, dtype=float)
    return _ret(-0.5 * t * (rho**2 - rho**-2) * np.sin(2 * np.asarray(theta)) - n * np.log(rho))


@dataclass(frozen=True, eq=False)
class SignMap:
    x: np.ndarray
    y: np.ndarray
    sign: np.ndarray  # shape (len(y), len(x)), values in {-1, 0, 1}


def sign_map(
    n: float,
    t: float,
    x_range: tuple[float, float] = (-2.0, 2.0),
    y_range: tuple[float, float] = (-2.0, 2.0),
    resolution: int | tuple[int, int] = 201,
    atol: float = 1e-12,
) -> SignMap:
    """Sign of Re phi on a rectangular grid (the grid must avoid z = 0)."""
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    x = np.linspace(*x_range, int(nx))
    y = np.linspace(*y_range, int(ny))
    Z = x[None, :] + 1j * y[:, None]
    if np.any(Z == 0):
        raise DomainError("grid contains z = 0")
    re = re_phi_polar(np.abs(Z), np.angle(Z), n, t)
    scale = atol * max(1.0, abs(t), abs(n))
    s = np.where(np.abs(re) <= scale, 0, np.sign(re)).astype(int)
    return SignMap(x, y, s)


def sign_changes_on_circle(n: float, t: float, radius: float, samples: int = 20000) -> np.ndarray:
    """Angles in [-pi, pi) where Re phi changes sign along |z| = radius."""
    theta = -np.pi + 2 * np.pi * np.arange(samples) / samples
    s = np.sign(re_phi_polar(radius, theta, n, t))
    flips = np.flatnonzero(s != np.roll(s, -1))
    # midpoint between the two samples that straddle the change
    return theta[flips] + np.pi / samples


def write_sign_map_csv(path: str | Path, smap: SignMap, header: dict | None = None) -> Path:
    path = Path(path)
    lines = [f"# {k}={v}" for k, v in (header or {}).items()]
    lines.append("x,y,sign")
    for j, yv in enumerate(smap.y):
        for i, xv in enumerate(smap.x):
            lines.append(f"{xv:.17g},{yv:.17g},{int(smap.sign[j, i])}")
    path.write_text("\n".join(lines) + "\n")
    return path
