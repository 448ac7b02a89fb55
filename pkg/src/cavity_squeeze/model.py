"""System description and drift matrices.

All 2N-dimensional objects use the quadrature ordering ``(x_1..x_N | y_1..y_N)``;
the complex-amplitude counterpart uses ``(a_1..a_N | a_1^dag..a_N^dag)``.
Rates are dimensionless multiples of a reference damping rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    NonPositiveDampingError,
    StructureViolationError,
)

DEFAULT_VALIDATION_TOL = 1e-10


@dataclass(frozen=True)
class RateUnit:
    """Declares what a rate of ``1.0`` means physically."""

    label: str = "gamma_ref"
    scale: float = 1.0


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


def _relative_deviation(dev: np.ndarray, ref: np.ndarray) -> float:
    num = np.linalg.norm(dev)
    if num == 0.0:
        return 0.0
    den = np.linalg.norm(ref)
    return float(num / den) if den > 0 else float("inf")


@dataclass(frozen=True, eq=False)
class InteractionModel:
    """Quadratic interaction model of ``N`` damped cavity modes.

    Attributes:
        g: Hermitian ``N x N`` mode-hopping matrix (detunings on the diagonal).
        f: symmetric ``N x N`` pair-production matrix.
        gamma: per-mode damping rates, all strictly positive.
        rate_unit: meaning of a unit rate.
        correction_norm: Frobenius norm of the symmetrisation applied by
            :func:`validate_model` (zero when the input was exact).

    Construction checks shapes, positivity and structure at the default
    tolerance but never alters the input; use :func:`validate_model` to
    clean up round-off.
    """

    g: np.ndarray
    f: np.ndarray
    gamma: np.ndarray
    rate_unit: RateUnit = field(default_factory=RateUnit)
    correction_norm: float = 0.0

    def __post_init__(self):
        g = _frozen(np.atleast_2d(self.g), complex)
        f = _frozen(np.atleast_2d(self.f), complex)
        gamma = _frozen(np.atleast_1d(self.gamma), float)
        _check_dimensions(g, f, gamma)
        _check_damping(gamma)
        _check_structure(g, f, DEFAULT_VALIDATION_TOL)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "gamma", gamma)

    @property
    def n_modes(self) -> int:
        return self.gamma.shape[0]

    def damping_matrix(self) -> np.ndarray:
        """The ``2N x 2N`` diagonal damping matrix ``diag(gamma | gamma)``."""
        return np.diag(np.concatenate([self.gamma, self.gamma]))

    def with_f(self, f) -> "InteractionModel":
        return InteractionModel(self.g, f, self.gamma, self.rate_unit)

    def scaled(self, factor: float) -> "InteractionModel":
        """Uniformly rescale every rate (G, F and the damping)."""
        return InteractionModel(
            self.g * factor, self.f * factor, self.gamma * factor, self.rate_unit
        )

    def __repr__(self):
        return f"InteractionModel(n_modes={self.n_modes}, gamma={self.gamma.tolist()})"


def _check_dimensions(g, f, gamma):
    n = gamma.shape[0]
    if gamma.ndim != 1 or n == 0:
        raise DimensionMismatchError("gamma must be a non-empty vector")
    for name, mat in (("G", g), ("F", f)):
        if mat.shape != (n, n):
            raise DimensionMismatchError(
                f"{name} has shape {mat.shape}, expected {(n, n)} for {n} modes"
            )


def _check_damping(gamma):
    if not np.all(np.isfinite(gamma)) or np.any(gamma <= 0):
        raise NonPositiveDampingError(f"damping rates must be > 0, got {gamma.tolist()}")


def _check_structure(g, f, tol):
    dev_g = _relative_deviation(g - g.conj().T, g)
    if dev_g > tol:
        raise StructureViolationError(f"G is not Hermitian (relative deviation {dev_g:.3e})")
    dev_f = _relative_deviation(f - f.T, f)
    if dev_f > tol:
        raise StructureViolationError(f"F is not symmetric (relative deviation {dev_f:.3e})")


def validate_model(
    g,
    f,
    gamma,
    *,
    n_modes: int | None = None,
    tol: float = DEFAULT_VALIDATION_TOL,
    rate_unit: RateUnit | None = None,
) -> InteractionModel:
    """Validate raw matrices and return a clean :class:`InteractionModel`.

    Deviations from Hermiticity of G and symmetry of F below ``tol``
    (relative Frobenius) are removed by symmetrisation and the size of the
    correction is recorded on the result.

    Raises:
        DimensionMismatchError: non-square matrices or inconsistent sizes.
        StructureViolationError: deviation above ``tol``.
        NonPositiveDampingError: some damping rate is not strictly positive.
    """
    g = np.atleast_2d(np.asarray(g, dtype=complex))
    f = np.atleast_2d(np.asarray(f, dtype=complex))
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    if n_modes is not None and gamma.shape != (n_modes,):
        raise DimensionMismatchError(
            f"n_modes={n_modes} but {gamma.shape[0]} damping rates given"
        )
    _check_dimensions(g, f, gamma)
    _check_damping(gamma)
    _check_structure(g, f, tol)

    g_sym = (g + g.conj().T) / 2
    f_sym = (f + f.T) / 2
    correction = float(np.sqrt(np.linalg.norm(g - g_sym) ** 2 + np.linalg.norm(f - f_sym) ** 2))
    return InteractionModel(
        g_sym, f_sym, gamma, rate_unit or RateUnit(), correction_norm=correction
    )


def symplectic_form(n_modes: int) -> np.ndarray:
    """``[[0, I], [-I, 0]]`` in quadrature ordering."""
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, eye], [-eye, zero]])


def basis_change(n_modes: int) -> np.ndarray:
    """Unitary ``L`` taking boson amplitudes to quadratures."""
    eye = np.eye(n_modes)
    return np.block([[eye, eye], [-1j * eye, 1j * eye]]) / np.sqrt(2)


@dataclass(frozen=True, eq=False)
class DriftMatrix:
    m_quad: np.ndarray
    m_complex: np.ndarray


def build_drift(model: InteractionModel) -> np.ndarray:
    """Real ``2N x 2N`` interaction matrix in quadrature ordering.

    Blocks are ``[[Im(G+F), Re(G-F)], [-Re(G+F), -Im(G+F)^T]]``; the result
    is Hamiltonian, i.e. ``Omega @ M`` is symmetric.
    """
    s = model.g + model.f
    d = model.g - model.f
    return np.block([[s.imag, d.real], [-s.real, -s.imag.T]])


def build_complex_drift(model: InteractionModel) -> np.ndarray:
    """Complex-amplitude interaction matrix ``[[G, F], [-F*, -G*]]``."""
    g, f = model.g, model.f
    return np.block([[g, f], [-f.conj(), -g.conj()]])


def complex_from_quadrature(m_quad: np.ndarray) -> np.ndarray:
    """``i L^dag M L``, the change of representation used to cross-check."""
    lmat = basis_change(m_quad.shape[0] // 2)
    return 1j * lmat.conj().T @ m_quad @ lmat


def quadrature_from_complex(m_complex: np.ndarray) -> np.ndarray:
    lmat = basis_change(m_complex.shape[0] // 2)
    return (-1j * lmat @ m_complex @ lmat.conj().T).real


def drift_matrices(model: InteractionModel) -> DriftMatrix:
    m_quad = build_drift(model)
    m_quad.flags.writeable = False
    m_complex = build_complex_drift(model)
    m_complex.flags.writeable = False
    return DriftMatrix(m_quad, m_complex)


def m_squared_blocks(model: InteractionModel):
    """The four ``N x N`` blocks of the squared complex drift.

    Returns:
        tuple: ``(G^2 - F F*, G F - F G*, -(G F - F G*)^dag, (G^2 - F F*)^T)``
        ordered top-left, top-right, bottom-left, bottom-right.
    """
    g, f = model.g, model.f
    diag = g @ g - f @ f.conj()
    off = g @ f - f @ g.conj()
    return diag, off, -off.conj().T, diag.T
