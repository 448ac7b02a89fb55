"""Frequency-domain input-output response of the cavity.

Frequencies are sideband offsets in units of the reference rate. Every
function here is pure in ``(model, omega)`` and may be evaluated
concurrently; :func:`map_grid` does so on a thread pool.
"""

from __future__ import annotations

import enum
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    ConsistencyError,
    NoThresholdFoundError,
    SingularKernelError,
    UnstableModelError,
)
from .model import InteractionModel, build_drift

CONDITION_LIMIT = 1e12
CONSISTENCY_RTOL = 1e-10
NEAR_THRESHOLD_MARGIN = 1e-6
THREADS_ENV = "CAVITY_SQUEEZE_THREADS"


class Normalization(enum.Enum):
    """Overall scale of the output covariance.

    ``SHOT_NOISE_UNITY`` makes the vacuum covariance the identity.
    ``PAPER_PREFACTOR`` keeps the ``1/(2 sqrt(2 pi))`` prefactor of the
    symmetric Fourier convention.
    """

    SHOT_NOISE_UNITY = "shot-noise"
    PAPER_PREFACTOR = "fourier"

    @property
    def prefactor(self) -> float:
        if self is Normalization.PAPER_PREFACTOR:
            return 1.0 / (2.0 * math.sqrt(2.0 * math.pi))
        return 1.0

    @classmethod
    def parse(cls, value) -> "Normalization":
        if isinstance(value, cls):
            return value
        for member in cls:
            if value in (member.value, member.name, member.name.lower()):
                return member
        raise ValueError(f"unknown normalization {value!r}")


@dataclass(frozen=True)
class FrequencyGrid:
    points: tuple
    symmetric: bool = False

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("frequency grid must be strictly increasing")
        if self.symmetric and not np.allclose(pts, [-p for p in reversed(pts)], rtol=0, atol=1e-12):
            raise ValueError("symmetric grid must be closed under negation")
        object.__setattr__(self, "points", pts)

    @classmethod
    def linspace(cls, start: float, stop: float, count: int) -> "FrequencyGrid":
        return cls(tuple(np.linspace(start, stop, count)))

    @classmethod
    def symmetric_from(cls, positive: Iterable[float]) -> "FrequencyGrid":
        """Mirror a set of frequencies so that the grid is closed under negation."""
        pos = sorted({abs(float(w)) for w in positive})
        neg = [-w for w in reversed(pos) if w != 0.0]
        return cls(tuple(neg + pos), symmetric=True)

    def mirrored(self) -> "FrequencyGrid":
        return FrequencyGrid.symmetric_from(self.points)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def as_array(self) -> np.ndarray:
        return np.array(self.points)


@dataclass(frozen=True, eq=False)
class TransferSample:
    omega: float
    s: np.ndarray
    s_r: np.ndarray
    s_i: np.ndarray


@dataclass(frozen=True, eq=False)
class CovarianceSample:
    omega: float
    sigma: np.ndarray
    sigma_r: np.ndarray
    sigma_i: np.ndarray
    normalization: Normalization

    @property
    def vacuum_level(self) -> float:
        return self.normalization.prefactor


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    margin: float


@dataclass(frozen=True, eq=False)
class ProductAsymmetry:
    srsit: np.ndarray
    difference: np.ndarray


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(1.0, float(np.linalg.norm(b)))
    return float(np.linalg.norm(a - b)) / scale


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return 1


def map_grid(fn: Callable[[float], object], omegas: Sequence[float]) -> list:
    """Evaluate ``fn`` on every frequency, preserving order."""
    omegas = list(omegas)
    workers = min(worker_count(), len(omegas))
    if workers <= 1:
        return [fn(w) for w in omegas]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, omegas))


# --- stability ---------------------------------------------------------------


def stability(model: InteractionModel) -> StabilityReport:
    """Stable iff every eigenvalue of ``-Gamma + M`` lies in the open left half-plane."""
    eig = np.linalg.eigvals(-model.damping_matrix() + build_drift(model))
    margin = float(-np.max(eig.real))
    return StabilityReport(margin > 0.0, margin)


def _ensure_stable(model: InteractionModel, require_stable: bool):
    if not require_stable:
        return
    report = stability(model)
    if not report.stable:
        raise UnstableModelError(
            f"model is above threshold (stability margin {report.margin:.3e}); "
            "pass require_stable=False to evaluate the response formally"
        )
    if report.margin < NEAR_THRESHOLD_MARGIN:
        warnings.warn(
            f"stability margin {report.margin:.3e} is below {NEAR_THRESHOLD_MARGIN:g}; "
            "the covariance diverges at threshold",
            RuntimeWarning,
            stacklevel=3,
        )


def threshold_scale(
    model: InteractionModel,
    pump_path: np.ndarray | None = None,
    *,
    s_max: float = 1e3,
    rtol: float = 1e-9,
) -> float:
    """Smallest ``s > 0`` at which ``F -> s * pump_path`` reaches threshold.

    ``pump_path`` defaults to the model's own ``F``. The crossing is
    bracketed on a geometric ladder and refined by bisection.

    Raises:
        NoThresholdFoundError: still stable at ``s_max`` (or the path is zero).
        UnstableModelError: unstable with the pump switched off.
    """
    path = model.f if pump_path is None else np.asarray(pump_path, dtype=complex)
    if not np.any(path):
        raise NoThresholdFoundError("pump path is identically zero")

    def margin(s: float) -> float:
        return stability(model.with_f(s * path)).margin

    if margin(0.0) <= 0.0:
        raise UnstableModelError("model is unstable without pumping")

    lo, hi = 0.0, None
    s = min(1e-3, s_max)
    while s <= s_max:
        if margin(s) <= 0.0:
            hi = s
            break
        lo = s
        s *= 2.0
    if hi is None:
        if margin(s_max) > 0.0:
            raise NoThresholdFoundError(f"no threshold below s_max={s_max:g}")
        hi = s_max
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if margin(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- transfer function -------------------------------------------------------


def _guard_condition(mat: np.ndarray, what: str):
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularKernelError(f"{what} is ill-conditioned (cond={cond:.3e})")


def inv_kernel(model: InteractionModel, omega: float) -> np.ndarray:
    """``[omega^2 I + (Gamma - M)^2]^{-1}``, even in ``omega``."""
    k = model.damping_matrix() - build_drift(model)
    kernel = omega**2 * np.eye(k.shape[0]) + k @ k
    _guard_condition(kernel, "omega^2 I + (Gamma - M)^2")
    return np.linalg.solve(kernel, np.eye(k.shape[0]))


def _direct_transfer(model: InteractionModel, omega: float) -> np.ndarray:
    gmat = model.damping_matrix()
    root = np.sqrt(2.0 * gmat)
    dim = gmat.shape[0]
    resolvent = 1j * omega * np.eye(dim) + gmat - build_drift(model)
    _guard_condition(resolvent, "i omega I + Gamma - M")
    return root @ np.linalg.solve(resolvent, root) - np.eye(dim)


def _split_from_kernel(model: InteractionModel, omega: float, inv: np.ndarray):
    gmat = model.damping_matrix()
    root = np.sqrt(2.0 * gmat)
    k = gmat - build_drift(model)
    s_r = root @ k @ inv @ root - np.eye(k.shape[0])
    s_i = -omega * root @ inv @ root
    return s_r, s_i


def gain_matrix(model: InteractionModel, omega: float) -> np.ndarray:
    """``Gamma^2 + [M, Gamma] - M^2 - omega^2 I``."""
    gmat = model.damping_matrix()
    m = build_drift(model)
    return gmat @ gmat + (m @ gmat - gmat @ m) - m @ m - omega**2 * np.eye(m.shape[0])


def transfer(model: InteractionModel, omega: float, *, require_stable: bool = True) -> TransferSample:
    """Transfer matrix from vacuum input to output quadratures.

    ``s`` comes from a direct complex solve of the resolvent, while ``s_r``
    and ``s_i`` come from the real kernel ``Inv(omega)``; the two routes
    must agree to ``1e-10`` relative.
    """
    _ensure_stable(model, require_stable)
    s = _direct_transfer(model, omega)
    s_r, s_i = _split_from_kernel(model, omega, inv_kernel(model, omega))
    err = _rel_err(s_r + 1j * s_i, s)
    if err > CONSISTENCY_RTOL:
        raise ConsistencyError(f"transfer routes disagree by {err:.3e}")
    return TransferSample(float(omega), s, s_r, s_i)


def transfer_split(model: InteractionModel, omega: float, *, require_stable: bool = True):
    """Real/imaginary parts of the transfer matrix, ``(s_r, s_i)``.

    ``s_r`` is evaluated in the factored form
    ``(2 Gamma)^{-1/2} A(omega) Inv(omega) (2 Gamma)^{1/2}`` and checked
    against ``(S(omega) + S(-omega)) / 2`` from the direct solve.
    """
    _ensure_stable(model, require_stable)
    gmat = model.damping_matrix()
    root = np.sqrt(2.0 * gmat)
    inv_root = np.diag(1.0 / np.diag(root))
    inv = inv_kernel(model, omega)
    s_r = inv_root @ gain_matrix(model, omega) @ inv @ root
    s_i = -omega * root @ inv @ root

    even = 0.5 * (_direct_transfer(model, omega) + _direct_transfer(model, -omega))
    err = _rel_err(s_r, even.real) + float(np.linalg.norm(even.imag)) / max(1.0, np.linalg.norm(even))
    if err > CONSISTENCY_RTOL:
        raise ConsistencyError(f"factored real part disagrees with the direct route by {err:.3e}")
    return s_r, s_i


# --- covariance --------------------------------------------------------------


def spectral_covariance(
    model: InteractionModel,
    omega: float,
    normalization: Normalization | str = Normalization.SHOT_NOISE_UNITY,
    *,
    require_stable: bool = True,
) -> CovarianceSample:
    """Output spectral covariance for vacuum input.

    ``sigma = c S(omega) S(omega)^dag`` (using ``S^T(-omega) = S^dag(omega)``).
    The real part is assembled as ``c (S_R S_R^T + S_I S_I^T)`` and the
    imaginary part as ``c (S_I S_R^T - S_R S_I^T)``; both are checked
    against the direct product.
    """
    normalization = Normalization.parse(normalization)
    c = normalization.prefactor
    ts = transfer(model, omega, require_stable=require_stable)
    sigma = c * ts.s @ ts.s.conj().T
    sigma_r = c * (ts.s_r @ ts.s_r.T + ts.s_i @ ts.s_i.T)
    sigma_i = c * (ts.s_i @ ts.s_r.T - ts.s_r @ ts.s_i.T)
    err = _rel_err(sigma_r + 1j * sigma_i, sigma)
    if err > CONSISTENCY_RTOL:
        raise ConsistencyError(f"covariance split disagrees with direct product by {err:.3e}")
    # Hermitian by construction; symmetrise away round-off.
    sigma = 0.5 * (sigma + sigma.conj().T)
    return CovarianceSample(
        float(omega),
        sigma,
        0.5 * (sigma_r + sigma_r.T),
        0.5 * (sigma_i - sigma_i.T),
        normalization,
    )


def product_asymmetry(
    model: InteractionModel, omega: float, *, require_stable: bool = True
) -> ProductAsymmetry:
    """Closed forms for ``S_R S_I^T`` and ``S_R S_I^T - S_I S_R^T``.

    With ``A = gain_matrix`` and ``B = Inv Gamma Inv^T``:

    * ``S_R S_I^T = -2 omega (2 Gamma)^{-1/2} A B (2 Gamma)^{1/2}``
    * difference ``= -4 omega (2 Gamma)^{-1/2} (A B Gamma - Gamma B A^T) (2 Gamma)^{-1/2}``

    Both are checked against direct products of :func:`transfer_split`.
    """
    gmat = model.damping_matrix()
    root = np.sqrt(2.0 * gmat)
    inv_root = np.diag(1.0 / np.diag(root))
    a = gain_matrix(model, omega)
    inv = inv_kernel(model, omega)
    b = inv @ gmat @ inv.T
    srsit = -2.0 * omega * inv_root @ a @ b @ root
    diff = -4.0 * omega * inv_root @ (a @ b @ gmat - gmat @ b @ a.T) @ inv_root

    s_r, s_i = transfer_split(model, omega, require_stable=require_stable)
    direct = s_r @ s_i.T
    for name, closed, ref in (
        ("S_R S_I^T", srsit, direct),
        ("difference", diff, direct - direct.T),
    ):
        err = _rel_err(closed, ref)
        if err > CONSISTENCY_RTOL:
            raise ConsistencyError(f"closed form for {name} disagrees by {err:.3e}")
    return ProductAsymmetry(srsit, diff)


def covariance_on_grid(
    model: InteractionModel,
    grid: Iterable[float],
    normalization: Normalization | str = Normalization.SHOT_NOISE_UNITY,
    *,
    require_stable: bool = True,
) -> list[CovarianceSample]:
    _ensure_stable(model, require_stable)
    return map_grid(
        lambda w: spectral_covariance(model, w, normalization, require_stable=False),
        list(grid),
    )
