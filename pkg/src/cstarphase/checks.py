"""Self-verification suites behind ``cstarphase verify``.

Each check returns a :class:`CheckResult`; random probes draw from one seeded
generator so a run is reproducible from its seed.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from cstarphase import geometry, linalg
from cstarphase.model import (
    DegenerateLevelError,
    Level,
    ParamPoint,
    TangentVector,
    check_nondegenerate,
    eigen_density,
    eigenvector,
    eigenvector_derivative,
)
from cstarphase.pathspec import LoopSpec, ParamPath, sample


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name} {self.detail}"


def random_point(rng: np.random.Generator) -> ParamPoint:
    """Random point with B3 > 0 so every default chart is regular."""
    b = rng.normal(size=3)
    b[2] = abs(b[2]) + 0.2
    return ParamPoint(*b, float(rng.uniform(0.2, 2.0)))


def random_tangent(rng: np.random.Generator) -> TangentVector:
    return TangentVector(*rng.normal(size=4))


def residual_convergence(rng, probes: int = 5, tol_scale: float = 1.0) -> CheckResult:
    ratios = []
    for _ in range(probes):
        p, t = random_point(rng), random_tangent(rng)
        r = [
            geometry.defining_residual(geometry.cstar_connection_defining(p, Level.L3, t, h), p, Level.L3, t)
            for h in (1e-3, 5e-4)
        ]
        ratios.append(r[0] / r[1])
    lo, hi = 4.0 - 0.5 * tol_scale, 4.0 + 0.5 * tol_scale
    ok = all(lo <= x <= hi for x in ratios)
    return CheckResult("defining_residual_order", ok, f"ratios={min(ratios):.3f}..{max(ratios):.3f}")


def trace_relation(rng, probes: int = 20, tol_scale: float = 1.0) -> CheckResult:
    worst = 0.0
    for _ in range(probes):
        p, t = random_point(rng), random_tangent(rng)
        for level in (Level.L1, Level.L3):
            lhs = geometry.universe_connection(p, level, t, method="trace")
            rhs = complex(np.vdot(eigenvector(p, level), geometry.eigenvector_fd(p, level, t)))
            worst = max(worst, abs(lhs - rhs))
    return CheckResult("trace_relation", worst <= 1e-8 * tol_scale, f"max_dev={worst:.2e}")


def universe_phase_l3(rng, probes: int = 20, tol_scale: float = 1.0) -> CheckResult:
    worst = max(
        abs(geometry.universe_connection(random_point(rng), Level.L3, random_tangent(rng), h=None))
        for _ in range(probes)
    )
    return CheckResult("universe_phase_l3_zero", worst <= 1e-10 * tol_scale, f"max_abs={worst:.2e}")


def bilocal_identity(rng, tol_scale: float = 1.0) -> CheckResult:
    worst = 0.0
    for weights in ((1.0, 0.0), (0.5, 0.5), (0.9, 0.1)):
        th1, th2 = rng.uniform(0.3, 1.2, size=2)
        scen = geometry.BilocalScenario.from_functions(
            lambda s, th=th1: [np.sin(th) * np.cos(2 * np.pi * s), np.sin(th) * np.sin(2 * np.pi * s), np.cos(th)],
            lambda s, th=th2: [0.3 * np.sin(2 * np.pi * s), np.sin(th) * np.cos(2 * np.pi * s), 1.0 + 0.2 * np.cos(th)],
            400,
            weights,
        )
        lhs, rhs = geometry.bilocal_schmidt_check(scen)
        worst = max(worst, abs(lhs - rhs))
    return CheckResult("bilocal_schmidt_identity", worst <= 1e-6 * tol_scale, f"max_dev={worst:.2e}")


def eta_invariance(rng, tol_scale: float = 1.0) -> CheckResult:
    """Transported L1 universe state around a loop is unchanged by the eta freedom."""
    loop = sample(LoopSpec(theta=float(rng.uniform(0.4, 1.2)), B=1.0, alpha=0.3, T=1.0, steps=2000))
    z = rng.normal(size=2) + 1j * rng.normal(size=2)

    def eta(p, t):
        # hat-frame one-form with vanishing first column, linear in t
        return np.array([[0.0, z[0]], [0.0, z[1]]]) * (t.dB1 + 0.5 * t.dB2)

    def end_state(e):
        conn = lambda p, t: geometry.cstar_connection_defining(p, Level.L1, t, eta=e)
        g = geometry.transport_factors(loop, conn)[-1]
        return linalg.tensor_product(g, linalg.SIGMA0) @ eigenvector(loop.point(loop.steps), Level.L1)

    dev = float(np.linalg.norm(end_state(eta) - end_state(None)))
    # eta drops out in the continuum; what remains is the O(step^2) chord error
    return CheckResult("eta_gauge_invariance", dev <= 1e-5 * tol_scale, f"state_dev={dev:.2e}")


def phase_gauge_covariance(rng, tol_scale: float = 1.0) -> CheckResult:
    """phi -> e^{i chi} phi shifts the L3 connection by i d chi."""
    p, t = random_point(rng), random_tangent(rng)
    c = rng.normal(size=4)
    chi = float(c @ p.as_array())
    dchi = float(c @ t.as_array())
    phi = np.exp(1j * chi) * eigenvector(p, Level.L3)
    dphi = np.exp(1j * chi) * (1j * dchi * eigenvector(p, Level.L3) + eigenvector_derivative(p, Level.L3, t))
    shifted = linalg.reduced_outer(dphi, phi) @ np.linalg.inv(eigen_density(p, Level.L3))
    base = geometry.cstar_connection_defining(p, Level.L3, t, h=None)
    dev = float(np.linalg.norm(shifted - base - 1j * dchi * np.eye(2)))
    return CheckResult("phase_gauge_covariance", dev <= 1e-8 * tol_scale, f"shift_dev={dev:.2e}")


def degeneracy_guard(paths: list[ParamPath]) -> CheckResult:
    for i, path in enumerate(paths):
        for k in range(len(path)):
            for level in (Level.L1, Level.L3):
                try:
                    check_nondegenerate(path.point(k), level)
                except DegenerateLevelError as exc:
                    return CheckResult("degeneracy_guard", False, f"path={i} sample={k}: {exc}")
    return CheckResult("degeneracy_guard", True, f"paths={len(paths)}")


def run_default_suite(seed: int = 0, tol_scale: float = 1.0, paths: list[ParamPath] | None = None):
    rng = np.random.default_rng(seed)
    results = [
        residual_convergence(rng, tol_scale=tol_scale),
        trace_relation(rng, tol_scale=tol_scale),
        universe_phase_l3(rng, tol_scale=tol_scale),
        bilocal_identity(rng, tol_scale=tol_scale),
        eta_invariance(rng, tol_scale=tol_scale),
        phase_gauge_covariance(rng, tol_scale=tol_scale),
    ]
    if paths:
        results.append(degeneracy_guard(paths))
    return results
