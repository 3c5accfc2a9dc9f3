"""Direct scattering for the defocusing Ablowitz-Ladik lattice.

Transfer matrix Z(z, R) = [[z, R], [conj(R), 1/z]], Jost vector started as
(z^n, 0) below the support and read off above it as (a z^n, b z^-n); the
reflection coefficient is r = b / a.  This raw convention is tagged
``"jost"``.

The Riemann-Hilbert formulation used by the asymptotic formulas carries a
reflection coefficient that evolves as r(z, t) = r(z, 0) exp(i t (z - 1/z)^2);
the raw one evolves with the opposite sign.  The two are related by

    r_rhp(z) = conj(r_jost(conj z)),   a_rhp(z) = conj(a_jost(conj z)),

which is equivalent to scattering the conjugated potential.  That form is
tagged ``"rhp"``.  A remaining global sign is fixed by calibration.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, OutOfRegimeError, UnitarityError
from .lattice import LatticeState

JOST = "jost"
RHP = "rhp"
CONVENTIONS = {
    JOST: "Z=[[z,R],[conj(R),1/z]]; v=(z^n,0) below support; r=b/a",
    RHP: "r(z)=conj(r_jost(conj(z))); evolves as exp(+i t (z-1/z)^2)",
}
# sign s in r(z, t) = r(z, 0) exp(s i t (z - 1/z)^2)
_EVOLUTION_SIGN = {JOST: -1.0, RHP: 1.0}

DEFAULT_N_ANGLES = 2048
T1 = np.exp(-0.25j * np.pi)


def uniform_angles(n: int = DEFAULT_N_ANGLES) -> np.ndarray:
    return 2 * np.pi * np.arange(n) / n


@dataclass(frozen=True, eq=False)
class ReflectionSamples:
    thetas: np.ndarray
    values: np.ndarray
    a_values: np.ndarray
    convention_tag: str = JOST

    def __post_init__(self):
        th = np.asarray(self.thetas, dtype=float)
        if th.ndim != 1 or th.size == 0:
            raise ValueError("thetas must be a non-empty 1-d grid")
        if np.any(np.diff(th) <= 0) or th[0] < 0 or th[-1] >= 2 * np.pi:
            raise ValueError("thetas must be strictly increasing in [0, 2pi)")
        if self.convention_tag not in CONVENTIONS:
            raise ValueError(f"unknown convention {self.convention_tag!r}")
        for name in ("thetas", "values", "a_values"):
            arr = np.array(getattr(self, name), dtype=float if name == "thetas" else complex)
            if arr.shape != th.shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {th.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def z(self) -> np.ndarray:
        return np.exp(1j * self.thetas)

    def sup_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def odd_symmetry_defect(self) -> float:
        """max |r(-z) + r(z)| over grid points whose antipode is also on the grid."""
        n = self.thetas.size
        if n % 2 or not np.allclose(self.thetas, uniform_angles(n)):
            raise ValueError("odd-symmetry check needs an even uniform grid")
        return float(np.max(np.abs(np.roll(self.values, n // 2) + self.values)))

    def to_convention(self, tag: str) -> "ReflectionSamples":
        if tag == self.convention_tag:
            return self
        # the map theta -> -theta (mod 2pi) with conjugation is an involution
        th = np.mod(-self.thetas, 2 * np.pi)
        order = np.argsort(th)
        return ReflectionSamples(
            th[order],
            np.conj(self.values[order]),
            np.conj(self.a_values[order]),
            tag,
        )


def transfer_matrix(z: complex, R: complex) -> np.ndarray:
    """Z(z, R) = [[z, R], [conj(R), 1/z]], defined for |z| = 1."""
    if not np.isclose(abs(z), 1.0, rtol=0, atol=1e-12):
        raise DomainError(f"|z| = {abs(z)!r}, expected 1")
    return np.array([[z, R], [np.conj(R), 1.0 / z]], dtype=complex)


def jost_coefficients(potential: LatticeState, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(a(z), b(z)) in the raw convention, vectorised over z."""
    z = np.asarray(z, dtype=complex)
    core = potential.trimmed()
    zinv = 1.0 / z
    # v carries an overall z^{n_min}, reinstated when reading off a and b
    v1 = np.ones_like(z)
    v2 = np.zeros_like(z)
    for Rn in core.amplitudes:
        v1, v2 = z * v1 + Rn * v2, np.conj(Rn) * v1 + zinv * v2
    length = len(core)
    a = v1 * z ** (-length)
    b = v2 * z ** (core.n_min + core.n_max + 1)
    return a, b


def scatter(
    initial: LatticeState,
    thetas: np.ndarray | None = None,
    *,
    convention: str = JOST,
    unitarity_tol: float = 1e-10,
) -> ReflectionSamples:
    """Reflection samples r(e^{i theta}) for the potential ``initial``."""
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    if np.max(np.abs(initial.amplitudes)) >= 1.0:
        raise OutOfRegimeError("non-defocusing input: max |R_n| >= 1")
    thetas = uniform_angles() if thetas is None else np.asarray(thetas, dtype=float)
    eval_thetas = thetas if convention == JOST else -thetas
    a, b = jost_coefficients(initial, np.exp(1j * eval_thetas))
    expected = float(np.prod(1.0 - np.abs(initial.amplitudes) ** 2))
    defect = float(np.max(np.abs(np.abs(a) ** 2 - np.abs(b) ** 2 - expected)))
    if defect > unitarity_tol:
        raise UnitarityError(f"|a|^2-|b|^2 off by {defect:.3e}")
    r = b / a
    if convention == RHP:
        r, a = np.conj(r), np.conj(a)
    return ReflectionSamples(thetas, r, a, convention)


def reflection_at(
    potential: LatticeState, z: complex | np.ndarray, convention: str = RHP
) -> complex | np.ndarray:
    """r at arbitrary points of the unit circle."""
    z = np.asarray(z, dtype=complex)
    if not np.allclose(np.abs(z), 1.0, rtol=0, atol=1e-12):
        raise DomainError("reflection coefficient is sampled on |z| = 1 only")
    if convention == JOST:
        a, b = jost_coefficients(potential, z)
        r = b / a
    else:
        a, b = jost_coefficients(potential, np.conj(z))
        r = np.conj(b / a)
    return r[()] if r.ndim == 0 else r


def reflection_at_T1(potential: LatticeState) -> complex:
    """r(e^{-i pi/4}) in the Riemann-Hilbert convention."""
    return complex(reflection_at(potential, T1, RHP))


def evolution_factor(z: np.ndarray, t: float, convention: str = RHP) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.exp(_EVOLUTION_SIGN[convention] * 1j * t * (z - 1.0 / z) ** 2)


def evolve_reflection(samples: ReflectionSamples, t: float) -> ReflectionSamples:
    """Multiply by the unimodular time factor; a(z) does not evolve."""
    if t < 0:
        raise ValueError("t must be non-negative")
    factor = evolution_factor(samples.z, t, samples.convention_tag)
    return ReflectionSamples(
        samples.thetas, samples.values * factor, samples.a_values, samples.convention_tag
    )


def write_reflection_csv(path: str | Path, samples: ReflectionSamples, header: dict | None = None) -> Path:
    path = Path(path)
    lines = [
        f"# convention_tag={samples.convention_tag}",
        f"# convention={CONVENTIONS[samples.convention_tag]}",
    ]
    lines += [f"# {k}={v}" for k, v in (header or {}).items()]
    lines.append("theta,re_r,im_r,abs_r")
    for th, r in zip(samples.thetas, samples.values):
        lines.append(f"{th:.17g},{r.real:.17g},{r.imag:.17g},{abs(r):.17g}")
    path.write_text("\n".join(lines) + "\n")
    return path
