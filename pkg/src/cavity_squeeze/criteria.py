"""Real versus complex spectral covariance.

For ``F != 0`` the covariance is real at every frequency iff the damping
commutes with the drift and the squared drift is symmetric; the latter is
equivalent to ``G F`` being symmetric. The diagnostics below are relative
Frobenius norms, so a verdict does not change under a global rescaling of
all rates.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InconsistentVerdictError
from .model import InteractionModel, build_drift
from .spectral import (
    FrequencyGrid,
    gain_matrix,
    inv_kernel,
    map_grid,
    spectral_covariance,
)

DEFAULT_TOL = 1e-9


class Verdict(enum.Enum):
    TRIVIALLY_REAL_F_ZERO = "TriviallyReal_FZero"
    DECOUPLED_DIAGONAL = "DecoupledDiagonal"
    REAL_COVARIANCE = "RealCovariance"
    COMPLEX_COVARIANCE = "ComplexCovariance"

    @property
    def is_real(self) -> bool:
        return self is not Verdict.COMPLEX_COVARIANCE


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    commutator_gamma_m: float
    m2_asymmetry: float
    gf_asymmetry: float
    tol: float

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "diagnostics": {
                "commutator_gamma_m": self.commutator_gamma_m,
                "m2_asymmetry": self.m2_asymmetry,
                "gf_asymmetry": self.gf_asymmetry,
            },
            "tol": self.tol,
        }


def _ratio(num: float, den: float) -> float:
    if num == 0.0:
        return 0.0
    return num / den if den > 0.0 else float("inf")


def commutator_diagnostic(model: InteractionModel) -> float:
    """``||[Gamma, M]|| / (||Gamma|| ||M||)``, zero when ``M = 0``."""
    gmat = model.damping_matrix()
    m = build_drift(model)
    norm_m = np.linalg.norm(m)
    if norm_m == 0.0:
        return 0.0
    return float(np.linalg.norm(gmat @ m - m @ gmat) / (np.linalg.norm(gmat) * norm_m))


def m2_asymmetry(model: InteractionModel) -> float:
    m = build_drift(model)
    m2 = m @ m
    return _ratio(float(np.linalg.norm(m2 - m2.T)), float(np.linalg.norm(m2)))


def gf_asymmetry(model: InteractionModel) -> float:
    gf = model.g @ model.f
    return _ratio(float(np.linalg.norm(gf - gf.T)), float(np.linalg.norm(gf)))


def _f_is_zero(model: InteractionModel, tol: float) -> bool:
    norm_f = np.linalg.norm(model.f)
    return norm_f == 0.0 or norm_f <= tol * np.linalg.norm(model.g)


def _drift_is_diagonal(model: InteractionModel, tol: float) -> bool:
    m = build_drift(model)
    off = m - np.diag(np.diag(m))
    return _ratio(float(np.linalg.norm(off)), float(np.linalg.norm(m))) <= tol


def classify(model: InteractionModel, tol: float = DEFAULT_TOL) -> Classification:
    """Predict whether the output spectral covariance is real.

    ``F = 0`` is checked first, then a diagonal drift (decoupled squeezers),
    then the two general conditions. All diagnostics are always filled in.
    """
    comm = commutator_diagnostic(model)
    m2 = m2_asymmetry(model)
    gf = gf_asymmetry(model)
    if _f_is_zero(model, tol):
        verdict = Verdict.TRIVIALLY_REAL_F_ZERO
    elif _drift_is_diagonal(model, tol):
        verdict = Verdict.DECOUPLED_DIAGONAL
    elif comm <= tol and m2 <= tol:
        verdict = Verdict.REAL_COVARIANCE
    else:
        verdict = Verdict.COMPLEX_COVARIANCE
    return Classification(verdict, comm, m2, gf, tol)


@dataclass(frozen=True)
class PropositionReport:
    classification: Classification
    max_relative_imag: float
    argmax_omega: float
    passed: bool


def relative_imaginary_part(model: InteractionModel, omega: float, *, require_stable: bool = True) -> float:
    """``||sigma_I|| / ||sigma||`` at one frequency."""
    cov = spectral_covariance(model, omega, require_stable=require_stable)
    return float(np.linalg.norm(cov.sigma_i) / np.linalg.norm(cov.sigma))


def verify_propositions(
    model: InteractionModel,
    grid: FrequencyGrid,
    tol: float = DEFAULT_TOL,
    *,
    require_stable: bool = True,
    raise_on_failure: bool = True,
) -> PropositionReport:
    """Check a verdict against the covariance measured on ``grid``.

    Real-family verdicts must keep ``max ||sigma_I|| / ||sigma||`` within
    ``10 * tol``; a complex verdict needs the ratio to exceed ``tol`` at
    some non-zero frequency.

    Raises:
        InconsistentVerdictError: when the measurement contradicts the
            verdict and ``raise_on_failure`` is set.
    """
    result = classify(model, tol)
    omegas = [w for w in grid.mirrored()]
    ratios = map_grid(lambda w: relative_imaginary_part(model, w, require_stable=require_stable), omegas)
    nonzero = [(r, w) for r, w in zip(ratios, omegas) if w != 0.0]
    worst, where = max(nonzero) if nonzero else (0.0, 0.0)
    if result.verdict.is_real:
        passed = max(ratios) <= 10.0 * tol
    else:
        passed = worst > tol
    if not passed and raise_on_failure:
        raise InconsistentVerdictError(
            f"verdict {result.verdict.value} but max relative |sigma_I| = {worst:.3e} "
            f"at omega={where:g}"
        )
    return PropositionReport(result, worst, where, passed)


@dataclass(frozen=True)
class CommutationReport:
    gamma_a: float
    gamma_b: float
    a_b: float
    tol: float

    @property
    def gamma_commutes(self) -> bool:
        return self.gamma_a <= self.tol and self.gamma_b <= self.tol

    @property
    def all_pairs_commute(self) -> bool:
        return self.gamma_commutes and self.a_b <= self.tol


def _rel_commutator(x: np.ndarray, y: np.ndarray) -> float:
    num = float(np.linalg.norm(x @ y - y @ x))
    den = float(np.linalg.norm(x) * np.linalg.norm(y))
    return _ratio(num, den)


def commutation_report(model: InteractionModel, omega: float, tol: float = DEFAULT_TOL) -> CommutationReport:
    """Relative commutators among ``Gamma``, ``A(omega)`` and ``B(omega)``."""
    gmat = model.damping_matrix()
    a = gain_matrix(model, omega)
    inv = inv_kernel(model, omega)
    b = inv @ gmat @ inv.T
    return CommutationReport(
        _rel_commutator(gmat, a), _rel_commutator(gmat, b), _rel_commutator(a, b), tol
    )


def pairwise_commutation_check(model: InteractionModel, omega: float, tol: float = DEFAULT_TOL) -> bool:
    """Whether the damping commutes with both ``A(omega)`` and ``B(omega)``.

    This is the part of the commutation structure that is equivalent to
    ``[Gamma, M] = 0``. ``[A, B]`` itself generally does not vanish even for
    uniform damping once ``M^2`` is not symmetric; it is available from
    :func:`commutation_report`.
    """
    return commutation_report(model, omega, tol).gamma_commutes
