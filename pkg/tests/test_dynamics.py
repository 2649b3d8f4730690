import numpy as np
import pytest

from cstarphase import geometry, linalg
from cstarphase.dynamics import (
    EvolutionResult,
    SuperpositionSpec,
    adiabatic_transport,
    coherence_closed_form,
    compare_exact_adiabatic,
    compare_results,
    compare_scalar_law,
    dynamical_phases,
    energy_expectation,
    evolve_superposition,
    initial_superposition,
    instantaneous_densities,
    propagate_exact,
)
from cstarphase.model import Level, eigen_density, eigenvector, spectrum
from cstarphase.pathspec import ConstSpec, LoopSpec, RampSpec, sample

HALF = SuperpositionSpec(2**-0.5, 2**-0.5)
P0_CONST = ConstSpec((0.0, 0.0, 1.0), 0.5, 250.0, 2500)
# lambda3 - lambda1 at (0, 0, 1, 0.5): (B - B0 - alpha) / 2
RATE = -0.309017


def const_path(T=20.0, steps=200):
    return sample(ConstSpec((0.0, 0.0, 1.0), 0.5, T, steps))


def loop_path(T, theta=1.0, steps_per_time=10):
    return sample(LoopSpec(theta=theta, B=1.0, alpha=0.3, T=float(T), steps=int(steps_per_time * T)))


def ramp_path(T=50.0, steps=1000):
    return sample(RampSpec(2.0, 0.1, (0.0, 0.0, 1.0), T, steps))


class TestSuperpositionSpec:
    def test_normalisation(self):
        with pytest.raises(ValueError):
            SuperpositionSpec(1.0, 0.1)
        s = SuperpositionSpec.from_polar(0.6, 0.3, 0.8, -1.0)
        assert abs(s.a) ** 2 + abs(s.b) ** 2 == pytest.approx(1, abs=1e-15)


class TestPropagateExact:
    def test_stationary_eigenstate(self):
        path = const_path()
        p = path.point(0)
        res = propagate_exact(path, eigenvector(p, Level.L3))
        lam = spectrum(p)[Level.L3]
        np.testing.assert_allclose(res.states[-1], np.exp(-1j * lam * 20.0) * eigenvector(p, Level.L3), atol=1e-11)
        rho3 = eigen_density(p, Level.L3)
        assert max(linalg.trace_distance(r, rho3) for r in res.rho) <= 1e-9

    def test_norm_and_energy(self):
        path = const_path()
        psi0 = initial_superposition(path, SuperpositionSpec(0.6, 0.8j))
        res = propagate_exact(path, psi0)
        assert np.max(np.abs(np.linalg.norm(res.states, axis=1) - 1)) <= 1e-9
        e = energy_expectation(path, res)
        assert np.ptp(e) <= 1e-9

    def test_norm_on_moving_path(self):
        res = propagate_exact(loop_path(5.0), initial_superposition(loop_path(5.0), HALF))
        assert np.max(np.abs(np.linalg.norm(res.states, axis=1) - 1)) <= 1e-9

    def test_hbar_independent(self):
        path = loop_path(3.0)
        psi0 = eigenvector(path.point(0), Level.L1)
        a = propagate_exact(path, psi0, hbar=1.0).states[-1]
        b = propagate_exact(path, psi0, hbar=0.37).states[-1]
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_second_order_in_dt(self):
        psi0 = eigenvector(loop_path(10.0).point(0), Level.L1)
        run = lambda n: propagate_exact(sample(LoopSpec(1.0, 1.0, 0.3, 10.0, n)), psi0).states[-1]
        ref = run(400)
        ratio = np.linalg.norm(run(50) - ref) / np.linalg.norm(run(100) - ref)
        assert 3.5 <= ratio <= 4.8

    def test_constant_coherence(self):
        path = sample(P0_CONST)
        res = propagate_exact(path, initial_superposition(path, HALF))
        assert np.ptp(np.abs(res.coherence)) <= 1e-6
        assert abs(res.coherence[0]) == pytest.approx(0.114877, abs=1e-6)
        # > 10 periods of 2 pi / 0.309
        rate = np.polyfit(path.times, np.unwrap(np.angle(res.coherence)), 1)[0]
        assert rate == pytest.approx(RATE, rel=1e-3)

    def test_slow_loop_return_decreases(self):
        for lv in (Level.L1, Level.L3):
            dist = []
            for T in (50, 100, 200):
                path = loop_path(T)
                res = propagate_exact(path, eigenvector(path.point(0), lv))
                dist.append(linalg.trace_distance(res.rho[-1], eigen_density(path.point(0), lv)))
            assert dist[0] > dist[1] > dist[2]

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            propagate_exact(const_path(), np.array([1.0, 1.0, 0, 0]))
        with pytest.raises(ValueError):
            propagate_exact(const_path(), np.array([1.0, 0, 0]))


def return_distance(level, T, theta):
    loop = loop_path(T, theta)
    final = propagate_exact(loop, eigenvector(loop.point(0), level)).rho[-1]
    return linalg.trace_distance(final, eigen_density(loop.point(0), level))


@pytest.mark.parametrize("theta", [1.0, np.pi / 2])
def test_slow_loop_return_improves_with_time(theta):
    d1 = [return_distance(Level.L1, T, theta) for T in (100.0, 200.0, 400.0)]
    assert d1[0] > d1[1] > d1[2]
    # L3 keeps a small oscillating residue (0.003 at T=200, 0.010 at T=400 on the
    # equator), so only the overall decrease from T to 4T is asserted
    assert return_distance(Level.L3, 400.0, theta) < return_distance(Level.L3, 100.0, theta)


class TestAdiabaticTransport:
    def test_constant_path(self):
        path = const_path()
        p = path.point(0)
        for lv in (Level.L1, Level.L3):
            res = adiabatic_transport(path, lv)
            lam = spectrum(p)[lv]
            expected = np.exp(-1j * lam * path.times)[:, None] * eigenvector(p, lv)
            np.testing.assert_allclose(res.states, expected, atol=1e-12)

    def test_l3_ramp_unit_trace(self):
        path = ramp_path(10.0, 200)
        res = adiabatic_transport(path, Level.L3)
        traces = np.trace(res.rho, axis1=1, axis2=2)
        assert np.max(np.abs(traces - 1)) <= 1e-9

    def test_transport_conjugates_eigen_density(self):
        path = ramp_path(10.0, 200)
        g = geometry.transport_factors(path, lambda p, t: geometry.cstar_connection_defining(p, Level.L3, t))
        res = adiabatic_transport(path, Level.L3)
        rho = instantaneous_densities(path, Level.L3)
        for k in (0, 50, 200):
            np.testing.assert_allclose(res.rho[k], g[k] @ rho[k] @ linalg.adjoint(g[k]), atol=1e-13)

    def test_transported_reduced_state_is_frozen(self):
        # d(G rho G^+) = G (d rho - A rho - rho A^+) G^+ = 0 for any solution of the defining equation
        path = ramp_path(10.0, 200)
        for connection in ("defining", "closed"):
            res = adiabatic_transport(path, Level.L3, connection=connection)
            assert max(np.linalg.norm(r - res.rho[0]) for r in res.rho) <= 1e-8

    def test_l1_loop_endpoint_is_berry_phased_start(self):
        path = loop_path(1.0, theta=0.8, steps_per_time=1000)
        res = adiabatic_transport(path, Level.L1)
        theta = dynamical_phases(path, Level.L1)[-1]
        phi0 = eigenvector(path.point(0), Level.L1)
        expected = np.exp(-1j * theta) / geometry.berry_holonomy(path) * phi0
        np.testing.assert_allclose(res.states[-1], expected, atol=1e-5)

    def test_degenerate_path_rejected(self):
        from cstarphase.model import DegenerateLevelError

        with pytest.raises(DegenerateLevelError):
            adiabatic_transport(sample(ConstSpec((0.0, 0.0, 0.0), 0.5, 1.0, 4)), Level.L1)


class TestSuperposition:
    def test_pure_l1_reduces_to_transport(self):
        path = loop_path(2.0)
        a = evolve_superposition(path, SuperpositionSpec(1.0, 0.0))
        b = adiabatic_transport(path, Level.L1)
        np.testing.assert_allclose(a.rho, b.rho, atol=1e-14)
        np.testing.assert_allclose(a.states, b.states, atol=1e-14)

    def test_constant_path_coherence(self):
        res = evolve_superposition(sample(P0_CONST), HALF)
        np.testing.assert_allclose(np.abs(res.coherence), 0.114877, atol=1e-6)

    def test_constant_path_matches_exact(self):
        path = const_path()
        res = evolve_superposition(path, HALF)
        exact = propagate_exact(path, initial_superposition(path, HALF))
        np.testing.assert_allclose(res.coherence, exact.coherence, atol=1e-12)

    @pytest.mark.parametrize(
        "path", [ramp_path(10.0, 200), sample(RampSpec(0.4, 3.0, (0.3, -0.2, 0.8), 10.0, 200))], ids=["axis", "tilted"]
    )
    def test_density_valid_on_ramps(self, path):
        res = evolve_superposition(path, SuperpositionSpec.from_polar(0.6, 0.4, 0.8, -0.9))
        np.testing.assert_allclose(res.rho, linalg.adjoint(res.rho), atol=1e-15)
        assert np.max(np.abs(np.trace(res.rho, axis1=1, axis2=2) - 1)) <= 1e-9
        assert np.min(np.linalg.eigvalsh(res.rho)) >= -1e-8

    def test_cross_term_trace_drifts_on_loops(self):
        # A_1 tau_13 is pinned by A_1 rho_1 = tr_2|d phi_1><phi_1| and differs from tr_2|d phi_1><phi_3|
        # once the field direction turns, so tr(G1 tau_13 G3^+) leaves zero
        res = evolve_superposition(loop_path(5.0), SuperpositionSpec.from_polar(0.6, 0.4, 0.8, -0.9))
        np.testing.assert_allclose(res.rho, linalg.adjoint(res.rho), atol=1e-15)
        traces = np.trace(res.rho, axis1=1, axis2=2).real
        assert traces[0] == pytest.approx(1, abs=1e-15)
        assert np.max(np.abs(traces - 1)) > 1e-2

    def test_assembly_matches_transported_state(self):
        path = loop_path(3.0)
        res = evolve_superposition(path, HALF)
        for k in (0, 10, 30):
            np.testing.assert_allclose(res.rho[k], linalg.reduced_outer(res.states[k], res.states[k]), atol=1e-13)

    def test_assembled_modulus_constant_on_axis_ramp(self):
        res = evolve_superposition(ramp_path(10.0, 200), HALF)
        assert np.ptp(np.abs(res.coherence)) <= 1e-8

    def test_exact_envelope_is_reciprocal_of_instanton_factor(self):
        # the hat-frame entry of tau_13 has modulus sqrt((B0 - B) / 2B0), which is 1 / instanton_factor up to a constant
        path = ramp_path(50.0, 1000)
        res = propagate_exact(path, initial_superposition(path, HALF))
        ratio = np.abs(res.coherence) / abs(res.coherence[0])
        np.testing.assert_allclose(ratio * geometry.instanton_factor_profile(path), 1.0, atol=0.1)


class TestClosedFormCoherence:
    def test_constant_path_pure_cosine(self):
        path = sample(P0_CONST)
        c = coherence_closed_form(path, HALF)
        amp = 0.5 * 0.229753
        phi_abc = np.pi / 2
        np.testing.assert_allclose(c.real, amp * np.cos(-RATE * path.times + phi_abc), atol=1e-6)

    def test_closed_path_envelope_is_one(self):
        path = loop_path(5.0)
        assert geometry.instanton_factor_profile(path)[-1] == pytest.approx(1, abs=1e-12)
        c = coherence_closed_form(path, HALF)
        assert np.all(np.isfinite(c))

    def test_scalar_law_disagrees_with_assembly_on_axis(self):
        path = ramp_path(10.0, 200)
        scalar = np.abs(coherence_closed_form(path, HALF))
        assembled = np.abs(evolve_superposition(path, HALF).coherence)
        # the scalar law beats as a cosine, the assembled modulus does not
        assert np.ptp(scalar) > 0.05 and np.ptp(assembled) < 1e-8

    def test_scalar_law_diagnostic_is_logged(self, caplog):
        with caplog.at_level("INFO", logger="cstarphase.dynamics"):
            diag = compare_scalar_law(ramp_path(10.0, 200), HALF)
        assert diag.scalar_modulus_spread > 0.05 and diag.assembled_modulus_spread < 1e-8
        (rec,) = caplog.records
        assert rec.max_modulus_deviation == diag.max_modulus_deviation > 0.05


class TestCompare:
    def test_constant_path(self):
        r = compare_exact_adiabatic(const_path(), HALF)
        assert max(r) <= 1e-9
        r = compare_exact_adiabatic(const_path(), Level.L3)
        assert max(r) <= 1e-9

    def test_fast_loop_large(self):
        path = sample(LoopSpec(1.5707963, 1.0, 0.3, 2.0, 20))
        r = compare_exact_adiabatic(path, Level.L1)
        assert r.max_trace_distance > 0.2

    def test_grid_mismatch(self):
        a = propagate_exact(const_path(steps=10), eigenvector(const_path().point(0), Level.L1))
        b = propagate_exact(const_path(steps=20), eigenvector(const_path().point(0), Level.L1))
        with pytest.raises(ValueError, match="grid"):
            compare_results(a, b)

    def test_report_deterministic(self):
        path = loop_path(3.0)
        assert compare_exact_adiabatic(path, HALF) == compare_exact_adiabatic(path, HALF)

    def test_result_type(self):
        res = propagate_exact(const_path(), eigenvector(const_path().point(0), Level.L1))
        assert isinstance(res, EvolutionResult) and len(res) == 201
