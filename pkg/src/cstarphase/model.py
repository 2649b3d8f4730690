"""Two-spin model: a spin-1/2 in a field B, coupled isotropically to a second spin-1/2.

    H(B, alpha) = B . S1 + (alpha / hbar) S1 . S2,   S1 = hbar/2 sigma (x) 1,  S2 = hbar/2 1 (x) sigma

The control point is the quadrivector (B0, B1, B2, B3) with
B0 = sqrt(|B|^2 + alpha^2); alpha is the system-environment coupling.
B and alpha share angular-frequency units, so the dynamics do not depend on hbar.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from cstarphase import linalg
from cstarphase.linalg import PAULI, SIGMA0

EPS = 1e-10
DEGENERACY_TOL = 1e-6


class SingularGaugeError(ValueError):
    """The requested eigenvector chart is singular (Dirac string / phase singularity) here."""


class DegenerateLevelError(ValueError):
    """Two levels are closer than the degeneracy tolerance; adiabatic statements are void."""


class Level(enum.Enum):
    L1 = "L1"
    L2 = "L2"
    L3 = "L3"
    L4 = "L4"

    @classmethod
    def parse(cls, text: str | Level) -> Level:
        if isinstance(text, Level):
            return text
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise ValueError(f"unknown level {text!r}; expected one of L1, L2, L3, L4") from None


@dataclass(frozen=True)
class ParamPoint:
    """Control point (B1, B2, B3, alpha) with alpha > 0."""

    B1: float
    B2: float
    B3: float
    alpha: float

    def __post_init__(self):
        vals = (self.B1, self.B2, self.B3, self.alpha)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError(f"non-finite ParamPoint component in {vals}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")

    @classmethod
    def from_array(cls, x) -> ParamPoint:
        b1, b2, b3, a = (float(v) for v in x)
        return cls(b1, b2, b3, a)

    def as_array(self) -> np.ndarray:
        return np.array([self.B1, self.B2, self.B3, self.alpha])

    @property
    def field(self) -> np.ndarray:
        return np.array([self.B1, self.B2, self.B3])

    @property
    def B(self) -> float:
        return float(np.sqrt(self.B1**2 + self.B2**2 + self.B3**2))

    @property
    def B0(self) -> float:
        return float(np.sqrt(self.B1**2 + self.B2**2 + self.B3**2 + self.alpha**2))

    @property
    def quadrivector(self) -> np.ndarray:
        """(B0, B1, B2, B3)."""
        return np.array([self.B0, self.B1, self.B2, self.B3])

    def moved(self, t: TangentVector, h: float) -> ParamPoint:
        return ParamPoint.from_array(self.as_array() + h * t.as_array())


@dataclass(frozen=True)
class TangentVector:
    """Displacement (dB1, dB2, dB3, dalpha) in parameter space."""

    dB1: float = 0.0
    dB2: float = 0.0
    dB3: float = 0.0
    dalpha: float = 0.0

    @classmethod
    def from_array(cls, x) -> TangentVector:
        d1, d2, d3, da = (float(v) for v in x)
        return cls(d1, d2, d3, da)

    def as_array(self) -> np.ndarray:
        return np.array([self.dB1, self.dB2, self.dB3, self.dalpha])

    @property
    def dfield(self) -> np.ndarray:
        return np.array([self.dB1, self.dB2, self.dB3])

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def scaled(self, c: float) -> TangentVector:
        return TangentVector.from_array(c * self.as_array())

    def d_B(self, p: ParamPoint) -> float:
        """Differential of |B| along this tangent."""
        b = p.B
        if b <= EPS:
            raise SingularGaugeError("d|B| is undefined at B = 0")
        return float(p.field @ self.dfield) / b

    def d_B0(self, p: ParamPoint) -> float:
        return (float(p.field @ self.dfield) + p.alpha * self.dalpha) / p.B0

    def quadri(self, p: ParamPoint) -> np.ndarray:
        """(dB0, dB1, dB2, dB3)."""
        return np.array([self.d_B0(p), self.dB1, self.dB2, self.dB3])


def hamiltonian(p: ParamPoint, hbar: float = 1.0) -> np.ndarray:
    s1 = [0.5 * hbar * linalg.tensor_product(s, SIGMA0) for s in PAULI]
    s2 = [0.5 * hbar * linalg.tensor_product(SIGMA0, s) for s in PAULI]
    h = sum(b * s for b, s in zip(p.field, s1))
    h = h + (p.alpha / hbar) * sum(a @ b for a, b in zip(s1, s2))
    return h


def spectrum(p: ParamPoint, hbar: float = 1.0) -> dict[Level, float]:
    b, b0, a = p.B, p.B0, p.alpha
    return {
        Level.L1: hbar * (a - 2 * b) / 4,
        Level.L2: hbar * (a + 2 * b) / 4,
        Level.L3: hbar * (-a - 2 * b0) / 4,
        Level.L4: hbar * (-a + 2 * b0) / 4,
    }


def level_gap(p: ParamPoint, level: Level, hbar: float = 1.0) -> float:
    """Distance from ``level`` to the nearest other level."""
    lam = spectrum(p, hbar)
    return min(abs(lam[level] - v) for k, v in lam.items() if k is not level)


def check_nondegenerate(p: ParamPoint, level: Level, hbar: float = 1.0, tol: float = DEGENERACY_TOL) -> None:
    gap = level_gap(p, level, hbar)
    if gap < tol:
        raise DegenerateLevelError(
            f"level {level.value} is degenerate at {p} (gap {gap:.3e} < {tol:g}); adiabatic transport is undefined"
        )


# ---------------------------------------------------------------------------
# eigenvectors
#
# "default" charts are the closed forms in the universe basis (uu, du, ud, dd);
# L2 and L4 follow from L1 and L3 by B -> -B and B0 -> -B0 respectively.
# "alt" charts for L1/L2 are the other monopole patch, regular where the
# default one is singular.


def _sign(level: Level) -> int:
    return 1 if level in (Level.L1, Level.L3) else -1


def _product_form(p: ParamPoint, level: Level, chart: str) -> tuple[np.ndarray, float]:
    """Unnormalised vector and its norm for L1/L2."""
    b1, b2, b3 = p.B1, p.B2, p.B3
    b = p.B
    if b <= EPS:
        raise SingularGaugeError(f"eigenvector {level.value} undefined at B = 0 (direction of B needed)")
    s = _sign(level)
    if chart == "default":
        bs = s * b
        den = bs + b3
        if abs(den) <= EPS:
            raise SingularGaugeError(
                f"{level.value} default chart is singular here (B {'+' if s > 0 else '-'} B3 = {abs(den):.2e});"
                " re-chart with chart='alt'"
            )
        v = np.array([(b2 + 1j * b1) ** 2, (b1 - 1j * b2) * den, (b1 - 1j * b2) * den, -(den**2)])
        return v, 2 * bs * den
    if chart == "alt":
        if s > 0:
            den = b - b3
            w = np.array([den, -(b1 + 1j * b2)])
            sign = -1.0
        else:
            den = b + b3
            w = np.array([den, b1 + 1j * b2])
            sign = 1.0
        if den <= EPS:
            raise SingularGaugeError(f"{level.value} alt chart is singular here; re-chart with chart='default'")
        return sign * linalg.kron_state(w, w), 2 * b * den
    raise ValueError(f"unknown chart {chart!r}")


def _singlet_form(p: ParamPoint, level: Level) -> tuple[np.ndarray, float]:
    """Unnormalised vector and its norm for L3/L4."""
    b1, b2, b3, a = p.B1, p.B2, p.B3, p.alpha
    b0s = _sign(level) * p.B0
    norm2 = b0s * (b0s + a)
    if norm2 <= EPS:
        raise SingularGaugeError(
            f"{level.value} phase convention is singular here (B0 {'+' if b0s > 0 else '-'} alpha ~ 0)"
        )
    v = np.array([b2 + 1j * b1, -1j * (b0s + b3 + a), 1j * (b0s - b3 + a), b2 - 1j * b1])
    return v, 2 * np.sqrt(norm2)


def eigenvector(p: ParamPoint, level: Level, chart: str = "default") -> np.ndarray:
    """Normalised universe eigenvector for ``level`` in the chosen gauge chart.

    Raises SingularGaugeError near the chart's singular locus instead of
    returning an ill-conditioned vector.
    """
    level = Level.parse(level)
    if level in (Level.L1, Level.L2):
        v, n = _product_form(p, level, chart)
    else:
        if chart != "default":
            raise ValueError(f"{level.value} has a single chart")
        v, n = _singlet_form(p, level)
    return v / n


def eigenvector_derivative(p: ParamPoint, level: Level, t: TangentVector) -> np.ndarray:
    """Exact directional derivative of the default-chart eigenvector along ``t``."""
    level = Level.parse(level)
    b1, b2, b3 = p.B1, p.B2, p.B3
    d1, d2, d3, da = t.as_array()
    s = _sign(level)
    if level in (Level.L1, Level.L2):
        v, n = _product_form(p, level, "default")
        bs = s * p.B
        dbs = s * t.d_B(p)
        den = bs + b3
        dden = dbs + d3
        beta, dbeta = b2 + 1j * b1, d2 + 1j * d1
        gamma, dgamma = b1 - 1j * b2, d1 - 1j * d2
        dv = np.array([2 * beta * dbeta, dgamma * den + gamma * dden, dgamma * den + gamma * dden, -2 * den * dden])
        dn = 2 * dbs * den + 2 * bs * dden
    else:
        v, n = _singlet_form(p, level)
        b0s = s * p.B0
        db0s = s * t.d_B0(p)
        a = p.alpha
        dv = np.array([d2 + 1j * d1, -1j * (db0s + d3 + da), 1j * (db0s - d3 + da), d2 - 1j * d1])
        # n = 2 sqrt(b0s (b0s + a))
        dn = n * 0.5 * (db0s / b0s + (db0s + da) / (b0s + a))
    return dv / n - v * dn / n**2


def eigen_density(p: ParamPoint, level: Level) -> np.ndarray:
    """Reduced density matrix tr_2 |phi><phi| of an eigenvector (chart independent).

    L1/L2 need B > 0; L3/L4 are defined everywhere.
    """
    level = Level.parse(level)
    bs = sum(b * s for b, s in zip(p.field, PAULI))
    if level in (Level.L1, Level.L2):
        b = p.B
        if b <= EPS:
            raise SingularGaugeError("rho_L1/rho_L2 undefined at B = 0")
        return 0.5 * SIGMA0 - _sign(level) * bs / (2 * b)
    return 0.5 * SIGMA0 - _sign(level) * bs / (2 * p.B0)


def cross_tau(p: ParamPoint, i: Level, j: Level, chart: str = "default") -> np.ndarray:
    """tau_ij = tr_2 |phi_i><phi_j|; tau_ji = tau_ij^+ and tau_ii = rho_i."""
    i, j = Level.parse(i), Level.parse(j)
    ci = chart if i in (Level.L1, Level.L2) else "default"
    cj = chart if j in (Level.L1, Level.L2) else "default"
    return linalg.reduced_outer(eigenvector(p, i, ci), eigenvector(p, j, cj))


class HatFrame(NamedTuple):
    M: np.ndarray
    rho1_hat: np.ndarray
    rho3_hat: np.ndarray


def hat_frame(p: ParamPoint) -> HatFrame:
    """Unitary M whose columns diagonalise rho_L1 with rho1_hat = diag(1, 0).

    Column 0 is the spin state anti-aligned with B (the support of rho_L1),
    column 1 the aligned one; each column's largest-modulus component is real
    positive. rho3_hat is M^+ rho_L3 M in the same column order, i.e.
    diag((B0 + B) / 2B0, (B0 - B) / 2B0).
    """
    b = p.B
    if b <= EPS:
        raise SingularGaugeError("hat frame undefined at B = 0: the field direction is needed")
    b1, b2, b3 = p.B1, p.B2, p.B3
    # pick the patch with the larger denominator for conditioning
    if b3 >= 0:
        down = np.array([b1 - 1j * b2, -(b + b3)]) / np.sqrt(2 * b * (b + b3))
        up = np.array([b + b3, b1 + 1j * b2]) / np.sqrt(2 * b * (b + b3))
    else:
        down = np.array([b - b3, -(b1 + 1j * b2)]) / np.sqrt(2 * b * (b - b3))
        up = np.array([b1 - 1j * b2, b - b3]) / np.sqrt(2 * b * (b - b3))
    m = linalg.fix_column_phases(np.column_stack([down, up]))
    rho1 = eigen_density(p, Level.L1)
    rho3 = eigen_density(p, Level.L3)
    return HatFrame(m, linalg.adjoint(m) @ rho1 @ m, linalg.adjoint(m) @ rho3 @ m)


def hat_cross(p: ParamPoint) -> np.ndarray:
    """tau_13 expressed in the hat frame, M^+ tau_13 M."""
    m = hat_frame(p).M
    return linalg.adjoint(m) @ cross_tau(p, Level.L1, Level.L3) @ m
