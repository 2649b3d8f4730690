"""Connections, holonomies and geometric factors.

Connections are evaluators ``conn(p, t)`` taking a :class:`ParamPoint` and a
:class:`TangentVector` and returning a complex number (abelian) or a 2x2
matrix acting on the system spin. Paths supply the sampling.

Path-ordered exponentials are accumulated segment by segment as
``G_{k+1} = G_k exp(-a_k)``, with ``a_k`` the connection integrated along the
straight chord of segment k by Gauss-Legendre quadrature. Earlier segments
stand to the left, so ``G`` solves ``dG = -G a``; this is the ordering under
which ``G rho_E G^+`` keeps unit trace for any generator solving the defining
equation ``a rho_E = tr_2 |d phi_E><phi_E|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from cstarphase import linalg
from cstarphase.linalg import PAULI, SIGMA, SIGMA0
from cstarphase.model import (
    EPS,
    Level,
    ParamPoint,
    SingularGaugeError,
    TangentVector,
    eigen_density,
    eigenvector,
    eigenvector_derivative,
    hat_frame,
)
from cstarphase.pathspec import ParamPath

Connection = Callable[[ParamPoint, TangentVector], "complex | np.ndarray"]

MINKOWSKI = np.diag([1.0, -1.0, -1.0, -1.0])
H_MIN, H_MAX = 1e-8, 1e-2
DEFAULT_H = 1e-4
DEFAULT_NODES = 3


def _build_thooft() -> np.ndarray:
    c = np.zeros((4, 4, 4), dtype=complex)
    for mu in range(4):
        for nu in range(4):
            c[mu, nu, 0] = MINKOWSKI[mu, nu]
    for i in range(1, 4):
        for j in range(1, 4):
            for k in range(1, 4):
                # Levi-Civita via the sign of the permutation
                c[i, j, k] = 1j * ((i - j) * (j - k) * (k - i)) / 2
            c[0, i, j] = 1.0 if i == j else 0.0
            c[i, 0, j] = -1.0 if i == j else 0.0
    return c


THOOFT = _build_thooft()
THOOFT.setflags(write=False)


def thooft(mu: int, nu: int, rho: int) -> complex:
    """Mixed 't Hooft-like symbol C_{mu nu rho}.

    C_{mu nu 0} = eta_{mu nu}, C_{ijk} = i eps_{ijk}, C_{0ij} = -C_{i0j} = delta_ij,
    zero otherwise.
    """
    for idx in (mu, nu, rho):
        if not (isinstance(idx, (int, np.integer)) and 0 <= idx <= 3):
            raise IndexError(f"'t Hooft indices must be integers in 0..3, got {(mu, nu, rho)}")
    return complex(THOOFT[mu, nu, rho])


# ---------------------------------------------------------------------------
# monopole (Berry) potential


def berry_connection(p: ParamPoint, t: TangentVector) -> complex:
    """A = -(i/2) (B2 dB1 - B1 dB2) / (B (B + B3)); regular off the Dirac string B3 < 0 axis."""
    b = p.B
    den = b * (b + p.B3)
    if b <= EPS or b + p.B3 <= EPS:
        raise SingularGaugeError(f"Berry potential chart is singular at {p} (Dirac string B1=B2=0, B3<0)")
    return -0.5j * (p.B2 * t.dB1 - p.B1 * t.dB2) / den


# ---------------------------------------------------------------------------
# instanton connection for L3


# sigma_nu with the index lowered by the Minkowski metric
_SIGMA_LOWER = np.array([MINKOWSKI[nu, nu] * SIGMA[nu] for nu in range(4)])


def cstar_connection_l3(p: ParamPoint, t: TangentVector) -> np.ndarray:
    """Closed-form instanton connection, equal to (1/2) d rho_L3 rho_L3^{-1}.

        -sigma^0 dB0 / (2 B0) + C_{mu nu rho} B^mu sigma_nu dB^rho / (2 eta_{mu nu} B^mu B^nu)

    with eta_{mu nu} B^mu B^nu = alpha^2.
    """
    a2 = p.alpha**2
    if p.alpha <= EPS:
        raise SingularGaugeError("instanton connection is singular at alpha = 0")
    bq = p.quadrivector
    dbq = t.quadri(p)
    coeff = np.einsum("mnr,m,r->n", THOOFT, bq, dbq)
    return -SIGMA0 * dbq[0] / (2 * bq[0]) + np.einsum("n,nij->ij", coeff, _SIGMA_LOWER) / (2 * a2)


def instanton_down(p: ParamPoint, t: TangentVector) -> float:
    """Hat-frame component (B dB0 - B0 dB) / (2 B0 (B0 - B)) of (1/2) d rho_hat rho_hat^{-1}."""
    b, b0 = p.B, p.B0
    return 0.5 * (b * t.d_B0(p) - b0 * t.d_B(p)) / (b0 * (b0 - b))


def instanton_up(p: ParamPoint, t: TangentVector) -> float:
    """The B -> -B partner of :func:`instanton_down`."""
    b, b0 = p.B, p.B0
    return 0.5 * (-b * t.d_B0(p) + b0 * t.d_B(p)) / (b0 * (b0 + b))


def hat_diagonal_connection(p: ParamPoint, t: TangentVector) -> np.ndarray:
    return np.diag([instanton_up(p, t), instanton_down(p, t)]).astype(complex)


# ---------------------------------------------------------------------------
# defining equation  A rho = tr_2 |d phi><phi|


def _check_h(h: float) -> None:
    if not (H_MIN <= h <= H_MAX):
        raise ValueError(f"finite-difference step h={h:g} outside [{H_MIN:g}, {H_MAX:g}]")


def eigenvector_fd(p: ParamPoint, level: Level, t: TangentVector, h: float = DEFAULT_H, chart: str = "default"):
    """Central-difference directional derivative of the eigenvector along ``t``.

    The step is taken along the unit direction of ``t`` so ``h`` keeps its
    meaning for tiny chord tangents.
    """
    _check_h(h)
    n = t.norm()
    if n == 0.0:
        return np.zeros(4, dtype=complex)
    u = t.scaled(1.0 / n)
    plus = eigenvector(p.moved(u, h), level, chart)
    minus = eigenvector(p.moved(u, -h), level, chart)
    return n * (plus - minus) / (2 * h)


def defining_rhs(
    p: ParamPoint, level: Level, t: TangentVector, h: float | None = DEFAULT_H, chart: str = "default"
) -> np.ndarray:
    """tr_2 |d phi><phi| along ``t``; exact (analytic derivative) when ``h`` is None."""
    level = Level.parse(level)
    phi = eigenvector(p, level, chart)
    if h is None:
        if chart != "default":
            raise ValueError("the analytic derivative is only available for the default chart")
        dphi = eigenvector_derivative(p, level, t)
    else:
        dphi = eigenvector_fd(p, level, t, h, chart)
    return linalg.reduced_outer(dphi, phi)


def cstar_connection_defining(
    p: ParamPoint,
    level: Level,
    t: TangentVector,
    h: float | None = DEFAULT_H,
    eta: Callable[[ParamPoint, TangentVector], np.ndarray] | None = None,
    chart: str = "default",
) -> np.ndarray:
    """Solve A rho_E = tr_2 |d phi_E><phi_E| for A by central differences.

    ``h=None`` uses the analytic eigenvector derivative instead (default chart).

    For L3/L4 rho_E is invertible and the solution is unique. For L1/L2 rho_E
    is a rank-one projector; the pseudo-inverse picks the representative with
    zero gauge freedom, and ``eta(p, t)`` may inject any hat-frame one-form
    that annihilates the hat-frame rho_E (first column zero for L1, second
    for L2).
    """
    level = Level.parse(level)
    x = defining_rhs(p, level, t, h, chart)
    rho = eigen_density(p, level)
    if level in (Level.L3, Level.L4):
        if p.alpha <= EPS:
            raise SingularGaugeError("rho_E is singular at alpha = 0")
        return x @ np.linalg.inv(rho)
    a = x @ np.linalg.pinv(rho, rcond=1e-8)
    if eta is not None:
        m = hat_frame(p).M
        e = np.asarray(eta(p, t), dtype=complex)
        rho_hat = linalg.adjoint(m) @ rho @ m
        if np.linalg.norm(e @ rho_hat) > 1e-12 * max(1.0, np.linalg.norm(e)):
            raise ValueError("eta must annihilate the hat-frame eigen density (eta rho_hat = 0)")
        a = a + m @ e @ linalg.adjoint(m)
    return a


def defining_residual(conn: np.ndarray, p: ParamPoint, level: Level, t: TangentVector) -> float:
    """|| A rho_E - tr_2 |d phi_E><phi_E| || against the exact derivative."""
    level = Level.parse(level)
    return float(np.linalg.norm(conn @ eigen_density(p, level) - defining_rhs(p, level, t, None)))


def universe_connection(
    p: ParamPoint, level: Level, t: TangentVector, h: float | None = DEFAULT_H, method: str = "trace"
) -> complex:
    """U(1) generator <<phi_E | d phi_E>> of the universe state.

    ``method="trace"`` averages the C*-connection, tr(rho_E A_E);
    ``method="direct"`` takes the inner product with a central-difference
    derivative of the universe eigenvector. ``h=None`` differentiates
    analytically in either method.
    """
    level = Level.parse(level)
    if method == "trace":
        return complex(np.trace(eigen_density(p, level) @ cstar_connection_defining(p, level, t, h)))
    if method == "direct":
        dphi = eigenvector_derivative(p, level, t) if h is None else eigenvector_fd(p, level, t, h)
        return complex(np.vdot(eigenvector(p, level), dphi))
    raise ValueError(f"unknown method {method!r}")


def asymptotic_gauge_norm(field, alpha: float, h: float = DEFAULT_H) -> float:
    """Operator norm of A_L3 along the unit d(alpha) direction at fixed field."""
    b1, b2, b3 = (float(v) for v in field)
    p = ParamPoint(b1, b2, b3, alpha)
    a = cstar_connection_defining(p, Level.L3, TangentVector(dalpha=1.0), h=min(h, 0.5 * alpha))
    return float(np.linalg.norm(a, 2))


# ---------------------------------------------------------------------------
# path-ordered exponentials


@lru_cache(maxsize=None)
def _gauss(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def segment_generators(path: ParamPath, conn: Connection, nodes: int = DEFAULT_NODES) -> list:
    """Connection integrated along each chord of the path (Gauss-Legendre in the chord parameter)."""
    s, w = _gauss(nodes)
    pts = path.points
    out = []
    for k in range(path.steps):
        d = pts[k + 1] - pts[k]
        if not np.any(d):
            out.append(None)
            continue
        t = TangentVector.from_array(d)
        acc = 0
        for sj, wj in zip(s, w):
            acc = acc + wj * np.asarray(conn(ParamPoint.from_array(pts[k] + sj * d), t))
        out.append(acc)
    return out


def transport_factors(path: ParamPath, conn: Connection, nodes: int = DEFAULT_NODES) -> np.ndarray:
    """Cumulative path-ordered exponentials G_k from sample 0 to every sample k.

    Returns an array of shape (N+1, d, d), d = 1 for abelian connections.
    """
    gens = segment_generators(path, conn, nodes)
    first = next((g for g in gens if g is not None), None)
    if first is None:
        # constant path: probe the value shape with a zero tangent
        first = conn(path.point(0), TangentVector())
    dim = 1 if np.ndim(first) == 0 else np.shape(first)[0]
    out = np.empty((path.steps + 1, dim, dim), dtype=complex)
    g = np.eye(dim, dtype=complex)
    out[0] = g
    for k, a in enumerate(gens):
        if a is not None:
            g = g @ linalg.expm(-np.atleast_2d(a).astype(complex))
        out[k + 1] = g
    return out


def path_ordered_exp(path: ParamPath, conn: Connection, nodes: int = DEFAULT_NODES):
    """P exp(-int conn) along the whole path; a scalar for abelian connections."""
    g = transport_factors(path, conn, nodes)[-1]
    return complex(g[0, 0]) if g.shape == (1, 1) else g


def berry_holonomy(loop: ParamPath, nodes: int = DEFAULT_NODES) -> complex:
    """exp(-oint A) of the monopole potential around a closed loop."""
    if not loop.closed:
        raise ValueError("berry_holonomy needs a closed loop (first and last samples must coincide)")
    return path_ordered_exp(loop, berry_connection, nodes)


def circle_solid_angle(theta: float) -> float:
    return 2 * np.pi * (1 - np.cos(theta))


def solid_angle(loop: ParamPath) -> float:
    """Signed solid angle enclosed by the field loop, seen from the north-pole chart.

    Sum of the triangles (north pole, b_k, b_{k+1}) with great-circle edges;
    positive for counter-clockwise circulation about +B3.
    """
    b = loop.points[:, :3]
    n = np.linalg.norm(b, axis=1)
    if np.any(n <= EPS):
        raise SingularGaugeError("solid angle undefined: loop passes through B = 0")
    u = b / n[:, None]
    a, c = u[:-1], u[1:]
    z = np.array([0.0, 0.0, 1.0])
    num = np.einsum("i,ki->k", z, np.cross(a, c))
    den = 1.0 + a @ z + c @ z + np.einsum("ki,ki->k", a, c)
    return float(np.sum(2 * np.arctan2(num, den)))


def instanton_factor(path: ParamPath, k: int | None = None) -> float:
    """exp(-int A_hat_down) from the start to sample k (default: the end), closed form.

        sqrt( B0(t) (B0(0) - B(0)) / ((B0(t) - B(t)) B0(0)) )
    """
    p0 = path.point(0)
    p1 = path.point(path.steps if k is None else k)
    return float(np.sqrt(p1.B0 * (p0.B0 - p0.B) / ((p1.B0 - p1.B) * p0.B0)))


def instanton_factor_profile(path: ParamPath) -> np.ndarray:
    pts = path.points
    b = np.linalg.norm(pts[:, :3], axis=1)
    b0 = np.sqrt(b**2 + pts[:, 3] ** 2)
    return np.sqrt(b0 * (b0[0] - b[0]) / ((b0 - b) * b0[0]))


def instanton_factor_numeric(path: ParamPath, nodes: int = DEFAULT_NODES) -> float:
    """Path-ordered exponential of the hat-frame A_hat_down along the path."""
    return float(np.real(path_ordered_exp(path, instanton_down, nodes)))


# ---------------------------------------------------------------------------
# bilocal scenario (no interaction, H = H1 (x) 1 + 1 (x) H2)


def spin_eigenvector(field, up: bool) -> np.ndarray:
    """Spin-1/2 eigenvector of B.sigma along (+) or against (-) the field, north chart."""
    b1, b2, b3 = (float(v) for v in field)
    b = float(np.sqrt(b1 * b1 + b2 * b2 + b3 * b3))
    if b <= EPS or b + b3 <= EPS:
        raise SingularGaugeError("single-spin north chart is singular (B = 0 or on the B3 < 0 axis)")
    n = np.sqrt(2 * b * (b + b3))
    if up:
        return np.array([b + b3, b1 + 1j * b2]) / n
    return np.array([b1 - 1j * b2, -(b + b3)]) / n


def spin_berry_connection(field, dfield, up: bool) -> complex:
    """<chi|d chi> for :func:`spin_eigenvector`: +A for the aligned state, -A for the anti-aligned one."""
    b1, b2, b3 = (float(v) for v in field)
    d1, d2, _ = (float(v) for v in dfield)
    b = float(np.sqrt(b1 * b1 + b2 * b2 + b3 * b3))
    a = -0.5j * (b2 * d1 - b1 * d2) / (b * (b + b3))
    return a if up else -a


@dataclass(frozen=True)
class BilocalScenario:
    """Two uncoupled spins, each driven by its own field, in a fixed Schmidt superposition.

    ``fields`` has shape (N+1, 6): spin-1 field then spin-2 field per sample.
    ``pairs`` lists the (spin 1 aligned?, spin 2 aligned?) eigenvector pair for
    each Schmidt term, with weights ``weights`` summing to one.
    """

    fields: np.ndarray
    weights: tuple[float, ...]
    pairs: tuple[tuple[bool, bool], ...] = ((False, False), (True, True))

    def __post_init__(self):
        f = np.asarray(self.fields, dtype=float)
        if f.ndim != 2 or f.shape[1] != 6 or f.shape[0] < 3:
            raise ValueError(f"fields must have shape (N+1, 6) with N >= 2, got {f.shape}")
        if len(self.weights) != len(self.pairs):
            raise ValueError("one weight per Schmidt pair is required")
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"weights must be non-negative and sum to 1, got {self.weights}")
        s1 = [p[0] for p in self.pairs]
        s2 = [p[1] for p in self.pairs]
        if len(set(s1)) != len(s1) or len(set(s2)) != len(s2):
            raise ValueError("Schmidt pairs must use distinct eigenvectors on each side")
        object.__setattr__(self, "fields", f)

    @classmethod
    def from_functions(cls, f1, f2, steps: int, weights, pairs=None) -> BilocalScenario:
        """Sample ``f1(s), f2(s)`` (3-vectors) on s in [0, 1]."""
        s = np.arange(steps + 1) / steps
        fields = np.array([np.concatenate([f1(x), f2(x)]) for x in s])
        kw = {} if pairs is None else {"pairs": tuple(pairs)}
        return cls(fields, tuple(weights), **kw)

    @property
    def closed(self) -> bool:
        return bool(np.max(np.abs(self.fields[0] - self.fields[-1])) <= 1e-12)

    def state(self, x: np.ndarray) -> np.ndarray:
        """Universe vector sum_i sqrt(p_i) zeta_i (x) xi_i at the field pair x (6-vector)."""
        out = np.zeros(4, dtype=complex)
        for w, (up1, up2) in zip(self.weights, self.pairs):
            out += np.sqrt(w) * linalg.kron_state(spin_eigenvector(x[:3], up1), spin_eigenvector(x[3:], up2))
        return out

    def hamiltonian(self, x: np.ndarray) -> np.ndarray:
        h1 = 0.5 * sum(b * s for b, s in zip(x[:3], PAULI))
        h2 = 0.5 * sum(b * s for b, s in zip(x[3:], PAULI))
        return linalg.tensor_product(h1, SIGMA0) + linalg.tensor_product(SIGMA0, h2)

    def eigenoperator(self, x: np.ndarray) -> np.ndarray:
        """E = sum_i (mu_i + nu_i) |zeta_i><zeta_i| acting on spin 1."""
        b1 = np.linalg.norm(x[:3])
        b2 = np.linalg.norm(x[3:])
        e = np.zeros((2, 2), dtype=complex)
        for up1, up2 in self.pairs:
            z = spin_eigenvector(x[:3], up1)
            mu = 0.5 * b1 * (1 if up1 else -1)
            nu = 0.5 * b2 * (1 if up2 else -1)
            e += (mu + nu) * np.outer(z, z.conj())
        return e


def bilocal_schmidt_check(
    scenario: BilocalScenario, nodes: int = DEFAULT_NODES, h: float = 1e-5
) -> tuple[complex, complex]:
    """Both sides of  int <<phi|d phi>> = sum_i p_i (int <zeta_i|d zeta_i> + int <xi_i|d xi_i>).

    The left side differentiates the universe Schmidt state numerically; the
    right side sums analytic single-spin Berry potentials. Both use the same
    chord quadrature.
    """
    _check_h(h)
    s, w = _gauss(nodes)
    x = scenario.fields
    lhs = 0j
    rhs = 0j
    for k in range(x.shape[0] - 1):
        d = x[k + 1] - x[k]
        nd = np.linalg.norm(d)
        if nd == 0.0:
            continue
        u = d / nd
        for sj, wj in zip(s, w):
            y = x[k] + sj * d
            phi = scenario.state(y)
            dphi = (scenario.state(y + h * u) - scenario.state(y - h * u)) / (2 * h)
            lhs += wj * nd * np.vdot(phi, dphi)
            for p_i, (up1, up2) in zip(scenario.weights, scenario.pairs):
                rhs += wj * p_i * (
                    spin_berry_connection(y[:3], d[:3], up1) + spin_berry_connection(y[3:], d[3:], up2)
                )
    return complex(lhs), complex(rhs)
