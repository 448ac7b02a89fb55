import math
import warnings

import numpy as np
import pytest
from hypothesis import given

from cavity_squeeze.errors import (
    NoThresholdFoundError,
    SingularKernelError,
    UnstableModelError,
)
from cavity_squeeze.model import InteractionModel, basis_change, build_complex_drift, symplectic_form
from cavity_squeeze.scenarios import single_mode_opo
from cavity_squeeze.spectral import (
    THREADS_ENV,
    FrequencyGrid,
    Normalization,
    covariance_on_grid,
    gain_matrix,
    inv_kernel,
    product_asymmetry,
    spectral_covariance,
    stability,
    threshold_scale,
    transfer,
    transfer_split,
)

from .helpers import frequencies, stable_models


def complex_basis_transfer(model, omega):
    """Independent route: solve the dynamics for the boson amplitudes."""
    n = model.n_modes
    lmat = basis_change(n)
    gmat = np.diag(np.concatenate([model.gamma, model.gamma]))
    root = np.sqrt(2 * gmat)
    kernel = 1j * omega * np.eye(2 * n) + gmat + 1j * build_complex_drift(model)
    s_c = root @ np.linalg.solve(kernel, root) - np.eye(2 * n)
    return lmat @ s_c @ lmat.conj().T


@given(stable_models(), frequencies)
def test_transfer_matches_complex_amplitude_route(model, omega):
    s = transfer(model, omega).s
    np.testing.assert_allclose(s, complex_basis_transfer(model, omega), atol=1e-9 * max(1, np.abs(s).max()))


def test_degenerate_opo_on_resonance_by_hand():
    # delta = 0, g = gamma / 2: S(0) = diag((1 + g) / (1 - g), (1 - g) / (1 + g))
    s = transfer(single_mode_opo(0.0, 0.5, 1.0), 0.0).s
    np.testing.assert_allclose(s, np.diag([3.0, 1.0 / 3.0]), atol=1e-14)


def test_empty_cavity_reflects_vacuum():
    # F = G = 0: S = (1 - i w) / (1 + i w) on every port
    model = InteractionModel(np.zeros((2, 2)), np.zeros((2, 2)), [1.0, 1.0])
    s = transfer(model, 0.4).s
    np.testing.assert_allclose(s, (1 - 0.4j) / (1 + 0.4j) * np.eye(4), atol=1e-14)


@given(stable_models(), frequencies)
def test_conjugate_symmetry(model, omega):
    np.testing.assert_allclose(transfer(model, omega).s.conj(), transfer(model, -omega).s, atol=1e-10)


@given(stable_models(), frequencies)
def test_transfer_is_symplectic(model, omega):
    s = transfer(model, omega).s
    form = symplectic_form(model.n_modes)
    np.testing.assert_allclose(s @ form @ s.conj().T, form, atol=1e-10)


@given(stable_models(), frequencies)
def test_covariance_is_hermitian_psd(model, omega):
    sigma = spectral_covariance(model, omega).sigma
    np.testing.assert_allclose(sigma, sigma.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(sigma)[0] > 0


@given(stable_models(), frequencies)
def test_real_part_even_imaginary_part_odd(model, omega):
    plus, minus = spectral_covariance(model, omega), spectral_covariance(model, -omega)
    scale = np.abs(plus.sigma).max()
    np.testing.assert_allclose(plus.sigma_r, minus.sigma_r, atol=1e-10 * scale)
    np.testing.assert_allclose(plus.sigma_i, -minus.sigma_i, atol=1e-10 * scale)
    np.testing.assert_allclose(plus.sigma_i, -plus.sigma_i.T, atol=1e-12 * scale)


@given(stable_models())
def test_zero_frequency_covariance_is_real(model):
    cov = spectral_covariance(model, 0.0)
    assert np.abs(cov.sigma_i).max() <= 1e-12 * np.abs(cov.sigma).max()


@given(stable_models(), frequencies)
def test_split_matches_direct_product(model, omega):
    ts = transfer(model, omega)
    cov = spectral_covariance(model, omega)
    direct = ts.s @ ts.s.conj().T
    scale = max(1.0, np.linalg.norm(direct))
    assert np.linalg.norm(cov.sigma_r + 1j * cov.sigma_i - direct) <= 1e-10 * scale


@given(stable_models(), frequencies)
def test_closed_forms_match_direct_products(model, omega):
    s_r, s_i = transfer_split(model, omega)
    pa = product_asymmetry(model, omega)
    direct = s_r @ s_i.T
    scale = max(1.0, np.linalg.norm(direct))
    assert np.linalg.norm(pa.srsit - direct) <= 1e-10 * scale
    assert np.linalg.norm(pa.difference - (direct - direct.T)) <= 1e-10 * scale


@given(stable_models(), frequencies)
def test_imaginary_part_is_minus_difference(model, omega):
    cov = spectral_covariance(model, omega)
    diff = product_asymmetry(model, omega).difference
    np.testing.assert_allclose(cov.sigma_i, -diff, atol=1e-10 * max(1.0, np.abs(diff).max()))


@given(stable_models(), frequencies)
def test_real_part_of_transfer_is_factored_form(model, omega):
    gmat = model.damping_matrix()
    root = np.sqrt(2 * gmat)
    a, inv = gain_matrix(model, omega), inv_kernel(model, omega)
    expected = np.linalg.solve(root, a @ inv @ root)
    np.testing.assert_allclose(transfer(model, omega).s_r, expected, atol=1e-9 * max(1, np.abs(expected).max()))


def test_vacuum_input_without_pumping_gives_shot_noise():
    model = InteractionModel([[0.3, 0.1], [0.1, -0.2]], np.zeros((2, 2)), [1.0, 0.5])
    for norm in Normalization:
        cov = spectral_covariance(model, 0.8, norm)
        np.testing.assert_allclose(cov.sigma, norm.prefactor * np.eye(4), atol=1e-12)


def test_normalizations_differ_by_prefactor():
    model = single_mode_opo()
    a = spectral_covariance(model, 0.3, "shot-noise").sigma
    b = spectral_covariance(model, 0.3, "fourier").sigma
    np.testing.assert_allclose(b, a / (2 * math.sqrt(2 * math.pi)), rtol=1e-14)


def test_normalization_parse_rejects_unknown():
    with pytest.raises(ValueError):
        Normalization.parse("loud")


@pytest.mark.parametrize("delta", [0.0, 0.5, 1.0, 2.0])
def test_single_mode_threshold_eigenvalue_oracle(delta):
    # eigenvalues of -1 + M are -1 +- sqrt(g^2 - delta^2)
    expected = math.sqrt(1.0 + delta**2)
    assert threshold_scale(single_mode_opo(delta, 1.0, 1.0)) == pytest.approx(expected, rel=1e-8)


def test_threshold_needs_a_pump():
    with pytest.raises(NoThresholdFoundError):
        threshold_scale(single_mode_opo(1.0, 0.0))


def test_stability_margin_of_single_mode():
    # margin = gamma - sqrt(g^2 - delta^2) when g > delta
    report = stability(single_mode_opo(0.0, 0.6, 1.0))
    assert report.stable and report.margin == pytest.approx(0.4)


def test_unstable_model_is_refused_unless_allowed():
    model = single_mode_opo(0.0, 1.5, 1.0)
    with pytest.raises(UnstableModelError):
        spectral_covariance(model, 0.1)
    spectral_covariance(model, 0.1, require_stable=False)


def test_singular_kernel_at_threshold():
    with pytest.raises(SingularKernelError):
        transfer(single_mode_opo(0.0, 1.0, 1.0), 0.0, require_stable=False)


def test_near_threshold_warns():
    model = single_mode_opo(0.0, 1.0 - 1e-7, 1.0)
    with pytest.warns(RuntimeWarning, match="margin"):
        spectral_covariance(model, 0.5)


def test_grid_helpers():
    grid = FrequencyGrid.symmetric_from([0.0, 0.5, 1.0])
    assert grid.points == (-1.0, -0.5, 0.0, 0.5, 1.0)
    assert FrequencyGrid.linspace(0, 1, 3).mirrored().points == grid.points
    with pytest.raises(ValueError):
        FrequencyGrid((0.0, 0.0))
    with pytest.raises(ValueError):
        FrequencyGrid((0.0, 1.0), symmetric=True)


def test_thread_pool_gives_identical_results(monkeypatch):
    model = single_mode_opo()
    grid = FrequencyGrid.linspace(0, 3, 25)
    serial = [c.sigma for c in covariance_on_grid(model, grid)]
    monkeypatch.setenv(THREADS_ENV, "4")
    parallel = [c.sigma for c in covariance_on_grid(model, grid)]
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(a, b)


def test_uniform_rescaling_rescales_frequencies():
    model = single_mode_opo()
    a = spectral_covariance(model, 0.3).sigma
    b = spectral_covariance(model.scaled(4.0), 1.2).sigma
    np.testing.assert_allclose(a, b, rtol=1e-10)


def test_warning_free_for_healthy_models():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        spectral_covariance(single_mode_opo(), 0.1)
