import math

import numpy as np
import pytest

from cvbench import fock
from cvbench.ensembles import GaussianPrior, gauss_rule
from cvbench.errors import CutoffTooSmall, InvalidInput
from cvbench.gaussian import (E2, GaussianChannel, GaussianState,
                              apply_channel, average_fidelity_gaussian)

rng = np.random.default_rng(31)


def random_physical_gamma(generator):
    theta = generator.uniform(0, 2 * math.pi)
    r = generator.uniform(0.0, 0.8)
    extra = generator.uniform(0.0, 0.6, size=2)
    rot = np.array([[math.cos(theta), -math.sin(theta)],
                    [math.sin(theta), math.cos(theta)]])
    core = np.diag([0.5 * math.exp(2 * r) + extra[0],
                    0.5 * math.exp(-2 * r) + extra[1]])
    return rot @ core @ rot.T


# ---------------------------------------------------------------------------
# kets and basic operators


def test_coherent_amplitudes_formula():
    alpha = 0.7 - 0.3j
    ket = fock.coherent_ket(alpha, 25)
    expected = np.empty(25, complex)
    expected[0] = math.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, 25):
        expected[n] = expected[n - 1] * alpha / math.sqrt(n)
    assert np.allclose(ket.amplitudes, expected, atol=1e-15)
    assert ket.norm_squared == pytest.approx(1.0, abs=1e-12)
    assert ket.truncated_weight == pytest.approx(0.0, abs=1e-12)


def test_coherent_ket_guards_cutoff():
    with pytest.raises(CutoffTooSmall):
        fock.coherent_ket(3.0, 10)
    # Explicitly unguarded call returns the sub-normalized truncation.
    ket = fock.coherent_ket(3.0, 10, weight_tol=None)
    assert ket.norm_squared < 0.7


def test_coherent_batch_matches_single_kets():
    alphas = np.array([0.3, -1.0 + 0.5j, 2.0j])
    batch = fock.coherent_amplitudes(alphas, 30)
    for i, a in enumerate(alphas):
        single = fock.coherent_ket(a, 30, weight_tol=None)
        assert np.allclose(batch[:, i], single.amplitudes, atol=1e-15)


def test_coherent_overlaps():
    a, b = 0.9, -0.4 + 0.6j
    ka = fock.coherent_ket(a, 40)
    kb = fock.coherent_ket(b, 40)
    got = np.vdot(ka.amplitudes, kb.amplitudes)
    expected = np.exp(-0.5 * abs(a) ** 2 - 0.5 * abs(b) ** 2 + np.conj(a) * b)
    assert abs(got - expected) < 1e-12


def test_ladder_and_number_operators():
    a = fock.annihilation(12)
    n = fock.number_operator(12)
    comm = a @ a.conj().T - a.conj().T @ a
    # Truncation corrupts only the last diagonal entry of [a, a^dag].
    assert np.allclose(comm[:-1, :-1], np.eye(11))
    assert np.allclose(n, a.conj().T @ a)
    x = fock.quadrature_operator(12, 0)
    p = fock.quadrature_operator(12, 1)
    assert np.allclose(x, (a + a.conj().T) / math.sqrt(2))
    assert np.allclose(p, (a - a.conj().T) / (1j * math.sqrt(2)))


def test_displacement_builds_coherent_states():
    alpha = 0.8 + 0.4j
    d = fock.displacement(alpha, 35)
    assert np.allclose(d @ d.conj().T, np.eye(35), atol=1e-10)
    vac = np.zeros(35)
    vac[0] = 1.0
    # A BCH-ordering global phase is allowed; the physical state must match.
    overlap = np.vdot(d @ vac, fock.coherent_ket(alpha, 35).amplitudes)
    assert abs(overlap) == pytest.approx(1.0, abs=1e-10)


def test_rotation_is_a_number_phase():
    theta = 0.7
    r = fock.rotation(theta, 15)
    n = np.arange(15)
    assert np.allclose(np.diag(r), np.exp(1j * theta * n) * 0 + np.diag(r))
    assert np.allclose(r @ r.conj().T, np.eye(15), atol=1e-12)
    # Photon statistics are rotation invariant.
    ket = fock.coherent_ket(1.1, 15, weight_tol=None).amplitudes
    assert np.allclose(np.abs(r @ ket), np.abs(ket), atol=1e-12)


def test_squeeze_keeps_minimal_uncertainty():
    s = fock.squeeze(0.5, 50)
    vac = np.zeros(50)
    vac[0] = 1.0
    rho = fock.FockOperator(np.outer(s @ vac, (s @ vac).conj()))
    mean, cov = fock.mean_and_covariance(rho)
    assert np.allclose(mean, 0.0, atol=1e-10)
    assert np.linalg.det(cov) == pytest.approx(0.25, rel=1e-6)
    variances = np.sort(np.linalg.eigvalsh(cov))
    assert variances[0] == pytest.approx(0.5 * math.exp(-1.0), rel=1e-6)
    assert variances[1] == pytest.approx(0.5 * math.exp(1.0), rel=1e-6)


# ---------------------------------------------------------------------------
# states


def test_thermal_state_occupations():
    lam = 0.8
    th = fock.thermal_state(lam, 60)
    n = np.arange(60)
    expected = lam / (1 + lam) * (1 + lam) ** (-n.astype(float))
    assert np.allclose(np.diag(th.matrix).real, expected, atol=1e-15)
    assert th.trace == pytest.approx(1.0, abs=1e-6)
    mean_n = fock.expectation(th, fock.number_operator(60)).real
    assert mean_n == pytest.approx(1.0 / lam, rel=1e-4)


def test_gaussian_state_fock_reproduces_moments():
    for i in range(6):
        gamma = random_physical_gamma(rng)
        d = rng.normal(scale=1.0, size=2)
        rho = fock.gaussian_state_fock(d, gamma, 45)
        assert rho.trace == pytest.approx(1.0, abs=1e-8)
        mean, cov = fock.mean_and_covariance(rho)
        assert np.allclose(mean, d, atol=1e-6)
        assert np.allclose(cov, gamma, atol=1e-6)


def test_gaussian_state_fock_vacuum_and_coherent():
    vac = fock.gaussian_state_fock(np.zeros(2), E2 / 2, 20)
    assert vac.matrix[0, 0].real == pytest.approx(1.0, abs=1e-12)
    coh = fock.gaussian_state_fock(np.array([math.sqrt(2), 0.0]), E2 / 2, 30)
    ket = fock.coherent_ket(1.0, 30)
    assert fock.fidelity_pure(ket, coh) == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------------------
# channels on truncated states


def test_loss_is_trace_preserving_and_maps_coherent_to_coherent():
    alpha, T = 1.2 - 0.4j, 0.6
    rho = fock.coherent_ket(alpha, 40).projector()
    out = fock.apply_loss(rho, T)
    assert out.trace == pytest.approx(rho.trace, abs=1e-13)
    target = fock.coherent_ket(math.sqrt(T) * alpha, 40)
    assert fock.fidelity_pure(target, out) == pytest.approx(1.0, abs=1e-10)


def test_loss_scales_thermal_occupation():
    lam, T = 0.9, 0.5
    out = fock.apply_loss(fock.thermal_state(lam, 80), T)
    expected = fock.thermal_state(lam / T, 80)
    # Compare on a comfortably converged leading block.
    assert np.allclose(out.matrix[:40, :40], expected.matrix[:40, :40],
                       atol=1e-8)


def test_amp_adds_minimal_noise():
    G = 2.0
    vac = fock.FockOperator(np.diag([1.0] + [0.0] * 59))
    out = fock.apply_amp(vac, G)
    mean_n = fock.expectation(out, fock.number_operator(60)).real
    assert mean_n == pytest.approx(G - 1.0, rel=1e-6)
    mean, cov = fock.mean_and_covariance(out)
    assert np.allclose(cov, (G - 0.5) * E2, atol=1e-6)
    alpha = 0.7
    out = fock.apply_amp(fock.coherent_ket(alpha, 60).projector(), G)
    mean, _ = fock.mean_and_covariance(out)
    assert np.allclose(mean, [math.sqrt(2 * G) * alpha, 0.0], atol=1e-6)


def test_loss_then_amp_is_the_classical_map():
    # T = 1/2 then G = 2 equals heterodyne-and-re-prepare at unit gain: the
    # coherent input survives with one extra unit of added noise.
    rho = fock.coherent_ket(0.9, 50).projector()
    out = fock.apply_amp(fock.apply_loss(rho, 0.5), 2.0)
    mean, cov = fock.mean_and_covariance(out)
    assert np.allclose(mean, [0.9 * math.sqrt(2), 0.0], atol=1e-7)
    assert np.allclose(cov, 1.5 * E2, atol=1e-7)


def test_identity_shortcuts():
    rho = fock.coherent_ket(0.5, 25).projector()
    assert np.array_equal(fock.apply_loss(rho, 1.0).matrix, rho.matrix)
    assert np.array_equal(fock.apply_amp(rho, 1.0).matrix, rho.matrix)


def test_mixture_of_displacements_adds_single_axis_noise():
    vac = fock.FockOperator(np.diag([1.0] + [0.0] * 39))
    noisy = fock.gaussian_mixture_of_displacements(vac, 0.5, axis=0)
    mean, cov = fock.mean_and_covariance(noisy)
    assert np.allclose(mean, 0.0, atol=1e-9)
    assert np.allclose(cov, np.diag([1.0, 0.5]), atol=1e-7)
    noisy = fock.gaussian_mixture_of_displacements(vac, 0.25, axis=1)
    _, cov = fock.mean_and_covariance(noisy)
    assert np.allclose(cov, np.diag([0.5, 0.75]), atol=1e-7)


def test_mixture_preserves_trace_and_hermiticity():
    rho = fock.thermal_state(1.5, 30)
    out = fock.gaussian_mixture_of_displacements(rho, 0.3, axis=0)
    assert out.trace == pytest.approx(rho.trace, abs=1e-9)
    assert np.allclose(out.matrix, out.matrix.conj().T, atol=1e-12)


# ---------------------------------------------------------------------------
# metrics


def test_fidelity_pure_against_closed_form():
    lam = 0.7
    alpha = 0.6
    rho = fock.thermal_state(lam, 70)
    ket = fock.coherent_ket(alpha, 70)
    nbar = 1.0 / lam
    expected = 1.0 / (1 + nbar) * math.exp(-abs(alpha) ** 2 / (1 + nbar))
    assert fock.fidelity_pure(ket, rho) == pytest.approx(expected, rel=1e-8)


def test_trace_distance():
    k0 = fock.FockOperator(np.diag([1.0, 0.0, 0.0]))
    k1 = fock.FockOperator(np.diag([0.0, 1.0, 0.0]))
    assert fock.trace_distance(k0, k1) == pytest.approx(1.0, abs=1e-12)
    assert fock.trace_distance(k0, k0) == pytest.approx(0.0, abs=1e-12)
    mix = fock.FockOperator(0.5 * (k0.matrix + k1.matrix))
    assert fock.trace_distance(k0, mix) == pytest.approx(0.5, abs=1e-12)


def test_select_cutoff_covers_the_requested_support():
    for max_abs2, eta in [(2.0, 1.0), (5.0, 2.0), (1.0, 0.25)]:
        cutoff = fock.select_cutoff(max_abs2, eta)
        worst = math.sqrt(max(1.0, eta) * max_abs2)
        ket = fock.coherent_ket(worst, cutoff, weight_tol=None)
        assert ket.truncated_weight <= 1e-10
    assert fock.select_cutoff(5.0, 2.0) > fock.select_cutoff(2.0, 1.0)


def test_operator_serialization_roundtrip():
    rho = fock.thermal_state(1.0, 8)
    again = fock.FockOperator.from_json(rho.to_json())
    assert np.array_equal(rho.matrix, again.matrix)


# ---------------------------------------------------------------------------
# ensemble averaging


def test_average_fidelity_identity_channel():
    avg = fock.average_fidelity_fock(lambda rho: rho, 1.0, 0.5, cutoff=30)
    assert avg.error < 5e-4
    assert avg.value == pytest.approx(1.0, abs=5e-4 + avg.error)


def test_average_fidelity_matches_gaussian_engine_for_loss():
    eta, lam, T = 0.8, 0.4, 0.55
    channel = GaussianChannel(math.sqrt(T) * E2, (1 - T) / 2 * E2)
    exact = average_fidelity_gaussian(channel, eta, lam)
    avg = fock.average_fidelity_fock(
        lambda rho: fock.apply_loss(rho, T), eta, lam, cutoff=36)
    assert abs(avg.value - exact) <= 1e-4 + avg.error


def test_average_fidelity_importance_reweighting():
    # A rule built for another prior width must still integrate correctly.
    eta, lam, T = 1.0, 0.3, 0.7
    channel = GaussianChannel(math.sqrt(T) * E2, (1 - T) / 2 * E2)
    exact = average_fidelity_gaussian(channel, eta, lam)
    rule = gauss_rule(GaussianPrior(0.8), 28, 24)
    avg = fock.average_fidelity_fock(
        lambda rho: fock.apply_loss(rho, T), eta, lam, rule=rule, cutoff=40)
    assert abs(avg.value - exact) <= 1e-4 + avg.error


def test_average_fidelity_reports_honest_error_when_truncated():
    # Tiny cutoff: the value cannot be trusted and the error term must say so.
    avg = fock.average_fidelity_fock(lambda rho: rho, 1.0, 0.2, cutoff=6)
    assert avg.error > 1e-3


def test_average_fidelity_validates_inputs():
    with pytest.raises(InvalidInput):
        fock.average_fidelity_fock(lambda rho: rho, 0.0, 0.5)
    with pytest.raises(InvalidInput):
        fock.average_fidelity_fock(lambda rho: rho, 1.0, 0.0)
