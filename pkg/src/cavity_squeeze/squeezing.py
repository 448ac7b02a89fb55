"""Optimal and homodyne-accessible squeezing.

The optimum at a sideband frequency is the smallest eigenvalue of the
Hermitian covariance ``sigma``. Homodyne detection with a frequency-flat
local oscillator measures the real quadratic form ``w^T sigma w`` with a real
direction ``w``; the antisymmetric ``sigma_I`` drops out of that form, which
is exactly why part of the squeezing can be hidden from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.linalg import block_diag
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .errors import AlignmentAmbiguousError, NoSqueezingError, NotSymplecticError
from .model import InteractionModel, basis_change, symplectic_form
from .spectral import (
    FrequencyGrid,
    Normalization,
    _ensure_stable,
    map_grid,
    spectral_covariance,
    transfer,
)

SYMPLECTIC_TOL = 1e-8
DEGENERACY_TOL = 1e-8
ALIGNMENT_MIN_OVERLAP = 0.5


def to_db(x):
    return 10.0 * np.log10(x)


# --- Bloch-Messiah -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BlochMessiahSample:
    """``s = u @ diag(d) @ v^dag`` with ``u``, ``v`` unitary and conjugate-symplectic.

    ``d`` is stored mode-paired, ``(e^{r_1}..e^{r_N} | e^{-r_1}..e^{-r_N})``,
    so that ``diag(d)`` is itself symplectic. Straight from the decomposition
    the ``r_k`` are non-negative and descending; :func:`branch_align` may
    permute them. :attr:`sorted_d` gives the descending spectrum.
    """

    omega: float
    u: np.ndarray
    d: np.ndarray
    v: np.ndarray
    degenerate: bool = False

    @property
    def n_modes(self) -> int:
        return self.d.shape[0] // 2

    @property
    def sorted_d(self) -> np.ndarray:
        return np.sort(self.d)[::-1]

    @property
    def d_min(self) -> float:
        return float(self.d.min())

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.d) @ self.v.conj().T


def _is_degenerate(r: np.ndarray, tol: float) -> bool:
    if np.any(np.abs(r) < tol):
        return True
    rs = np.sort(r)
    return bool(np.any(np.diff(rs) < tol * np.maximum(1.0, rs[1:])))


def bloch_messiah_pointwise(s: np.ndarray, omega: float = 0.0, *, tol: float = SYMPLECTIC_TOL) -> BlochMessiahSample:
    """Symplectic singular value decomposition of a conjugate-symplectic matrix.

    In the complex-amplitude basis ``T = L^dag s L`` preserves
    ``diag(I, -I)``. Its polar factor ``P = (T^dag T)^{1/2}`` has the form
    ``Y [[cosh r, sinh r], [sinh r, cosh r]] Y^dag`` with ``Y = diag(Y1, Y2)``,
    and ``Y1``, ``Y2`` and ``sinh r`` follow from an SVD of the off-diagonal
    block of ``P``. Mapping back with ``L`` turns the two-mode squeezer into
    ``diag(e^r | e^-r)``.

    Raises:
        NotSymplecticError: ``s Omega s^dag != Omega`` beyond ``tol``
            (relative to ``max(1, ||s||^2)``).
    """
    s = np.asarray(s, dtype=complex)
    dim = s.shape[0]
    if s.shape != (dim, dim) or dim % 2:
        raise NotSymplecticError(f"expected a square matrix of even size, got {s.shape}")
    n = dim // 2
    form = symplectic_form(n)
    resid = np.linalg.norm(s @ form @ s.conj().T - form) / max(1.0, np.linalg.norm(s) ** 2)
    if resid > tol:
        raise NotSymplecticError(f"matrix is not conjugate-symplectic (residual {resid:.3e})")

    lmat = basis_change(n)
    t = lmat.conj().T @ s @ lmat
    w, sv, zh = np.linalg.svd(t)
    p = (zh.conj().T * sv) @ zh
    q = w @ zh

    p12 = p[:n, n:]
    if np.linalg.norm(p12) <= 1e-15 * max(1.0, np.linalg.norm(p)):
        y1 = np.eye(n, dtype=complex)
        y2 = np.eye(n, dtype=complex)
        sinh_r = np.zeros(n)
    else:
        y1, sinh_r, y2h = np.linalg.svd(p12)
        y2 = y2h.conj().T
    r = np.arcsinh(sinh_r)
    yd = block_diag(y1, y2)
    u = lmat @ q @ yd @ lmat.conj().T
    v = lmat @ yd @ lmat.conj().T
    d = np.concatenate([np.exp(r), np.exp(-r)])
    return BlochMessiahSample(float(omega), u, d, v, _is_degenerate(r, DEGENERACY_TOL))


def _permute_modes(sample: BlochMessiahSample, order, swapped) -> BlochMessiahSample:
    n = sample.n_modes
    u = np.empty_like(sample.u)
    v = np.empty_like(sample.v)
    d = np.empty_like(sample.d)
    for new, (old, flip) in enumerate(zip(order, swapped)):
        xi, yi = old, old + n
        if flip:
            # (x, y) -> (y, -x) keeps both the product and the symplectic form
            u[:, new], u[:, new + n] = sample.u[:, yi], -sample.u[:, xi]
            v[:, new], v[:, new + n] = sample.v[:, yi], -sample.v[:, xi]
            d[new], d[new + n] = sample.d[yi], sample.d[xi]
        else:
            u[:, new], u[:, new + n] = sample.u[:, xi], sample.u[:, yi]
            v[:, new], v[:, new + n] = sample.v[:, xi], sample.v[:, yi]
            d[new], d[new + n] = sample.d[xi], sample.d[yi]
    return replace(sample, u=u, v=v, d=d)


def _clusters(values: np.ndarray, tol: float):
    order = np.argsort(values)
    groups, current = [], [order[0]]
    for a, b in zip(order, order[1:]):
        if abs(values[b] - values[a]) <= tol * max(1.0, abs(values[a])):
            current.append(b)
        else:
            groups.append(current)
            current = [b]
    groups.append(current)
    return [sorted(g) for g in groups if len(g) > 1]


def _align_pair(prev: BlochMessiahSample, cur: BlochMessiahSample) -> BlochMessiahSample:
    n = cur.n_modes
    ov = prev.u.conj().T @ cur.u
    xx = np.abs(ov[:n, :n]) ** 2
    yy = np.abs(ov[n:, n:]) ** 2
    xy = np.abs(ov[:n, n:]) ** 2
    yx = np.abs(ov[n:, :n]) ** 2
    straight = 0.5 * (xx + yy)
    crossed = 0.5 * (xy + yx)
    score = np.maximum(straight, crossed)
    rows, cols = linear_sum_assignment(-score)
    order = [0] * n
    swapped = [False] * n
    for j, k in zip(rows, cols):
        order[j] = k
        swapped[j] = bool(crossed[j, k] > straight[j, k])
    cur = _permute_modes(cur, order, swapped)

    # Within a degenerate cluster the basis is arbitrary: rotate it onto the
    # previous basis (orthogonal Procrustes with the same unitary on x and y).
    u, v = cur.u.copy(), cur.v.copy()
    for group in _clusters(np.log(cur.d[:n]), DEGENERACY_TOL):
        xs = list(group)
        ys = [k + n for k in group]
        overlap = u[:, xs].conj().T @ prev.u[:, xs] + u[:, ys].conj().T @ prev.u[:, ys]
        wl, _, wrh = np.linalg.svd(overlap)
        z = wl @ wrh
        u[:, xs], u[:, ys] = u[:, xs] @ z, u[:, ys] @ z
        v[:, xs], v[:, ys] = v[:, xs] @ z, v[:, ys] @ z

    # Fix the free phase of each mode pair for continuity.
    for k in range(n):
        c = prev.u[:, k].conj() @ u[:, k] + prev.u[:, k + n].conj() @ u[:, k + n]
        if abs(c) > 0:
            phase = np.exp(-1j * np.angle(c))
            for col in (k, k + n):
                u[:, col] *= phase
                v[:, col] *= phase

    overlaps = [
        0.5 * (abs(prev.u[:, k].conj() @ u[:, k]) + abs(prev.u[:, k + n].conj() @ u[:, k + n]))
        for k in range(n)
    ]
    worst = min(overlaps)
    if worst <= ALIGNMENT_MIN_OVERLAP:
        raise AlignmentAmbiguousError(
            f"best basis overlap {worst:.3f} between omega={prev.omega:g} and "
            f"omega={cur.omega:g}; refine the frequency grid"
        )
    return replace(cur, u=u, v=v)


def branch_align(samples: Sequence[BlochMessiahSample]) -> list[BlochMessiahSample]:
    """Reorder and rephase singular triplets into continuous branches.

    Each sample is matched to the already aligned previous one, so the
    procedure is sequential in frequency. The multiset of singular values at
    every frequency is left unchanged.

    Raises:
        AlignmentAmbiguousError: neighbouring bases overlap by 0.5 or less.
    """
    aligned: list[BlochMessiahSample] = []
    for sample in samples:
        aligned.append(sample if not aligned else _align_pair(aligned[-1], sample))
    return aligned


def bloch_messiah_spectrum(
    model: InteractionModel, grid: Sequence[float], *, align: bool = True, require_stable: bool = True
) -> list[BlochMessiahSample]:
    _ensure_stable(model, require_stable)
    samples = map_grid(
        lambda w: bloch_messiah_pointwise(transfer(model, w, require_stable=False).s, w), list(grid)
    )
    return branch_align(samples) if align else samples


# --- covariance helpers --------------------------------------------------------


def reduce_covariance(sigma: np.ndarray, modes: Sequence[int] | None) -> np.ndarray:
    """Marginal covariance of a subset of modes (sub-block selection)."""
    if modes is None:
        return sigma
    n = sigma.shape[0] // 2
    modes = list(modes)
    if not modes or any(m < 0 or m >= n for m in modes):
        raise ValueError(f"mode indices {modes} out of range for {n} modes")
    idx = modes + [m + n for m in modes]
    return sigma[np.ix_(idx, idx)]


def _covariance(model, omega, normalization, modes, require_stable):
    cov = spectral_covariance(model, omega, normalization, require_stable=require_stable)
    vac = cov.vacuum_level
    return reduce_covariance(cov.sigma, modes) / vac, reduce_covariance(cov.sigma_r, modes) / vac


def optimal_value(model, omega, *, normalization=Normalization.SHOT_NOISE_UNITY, modes=None, require_stable=True) -> float:
    """Smallest covariance eigenvalue relative to the vacuum level (linear)."""
    sigma, _ = _covariance(model, omega, normalization, modes, require_stable)
    return float(np.linalg.eigvalsh(sigma)[0])


def optimal_spectrum(
    model: InteractionModel,
    grid: Sequence[float],
    *,
    normalization: Normalization | str = Normalization.SHOT_NOISE_UNITY,
    modes: Sequence[int] | None = None,
    require_stable: bool = True,
) -> np.ndarray:
    """Optimal squeezing in dB relative to shot noise at each frequency."""
    _ensure_stable(model, require_stable)
    values = map_grid(
        lambda w: optimal_value(model, w, normalization=normalization, modes=modes, require_stable=False),
        list(grid),
    )
    return to_db(np.array(values))


# --- homodyne detection --------------------------------------------------------


@dataclass(frozen=True)
class LOConfig:
    """Local oscillator: real unit mode weights and a phase (radians) or ``"scan"``."""

    mode_weights: tuple
    phase: float | str = "scan"

    def __post_init__(self):
        weights = np.asarray(self.mode_weights, dtype=float).ravel()
        norm = np.linalg.norm(weights)
        if not np.isclose(norm, 1.0, rtol=0, atol=1e-9):
            raise ValueError(f"LO mode weights must have unit norm, got {norm}")
        if isinstance(self.phase, str):
            if self.phase != "scan":
                raise ValueError("phase must be a number or 'scan'")
        else:
            object.__setattr__(self, "phase", float(self.phase) % (2 * math.pi))
        object.__setattr__(self, "mode_weights", tuple(weights.tolist()))

    @property
    def weights(self) -> np.ndarray:
        return np.array(self.mode_weights)

    @property
    def scanning(self) -> bool:
        return self.phase == "scan"


def quadrature_direction(theta: float, weights) -> np.ndarray:
    """``w = (cos(theta) u | sin(theta) u)`` in quadrature ordering."""
    u = np.asarray(weights, dtype=float)
    return np.concatenate([math.cos(theta) * u, math.sin(theta) * u])


def _phase_form(sigma_r: np.ndarray, weights: np.ndarray) -> np.ndarray:
    n = sigma_r.shape[0] // 2
    ux = np.concatenate([weights, np.zeros(n)])
    uy = np.concatenate([np.zeros(n), weights])
    basis = np.stack([ux, uy], axis=1)
    form = basis.T @ sigma_r @ basis
    return 0.5 * (form + form.T)


def best_phase(sigma_r: np.ndarray, weights) -> tuple[float, float]:
    """Phase minimising ``w^T sigma_r w`` for fixed weights, and the minimum.

    For fixed weights the form is a 2x2 quadratic form in ``(cos, sin)``,
    so the minimiser is its lowest eigenvector.
    """
    lam, vec = np.linalg.eigh(_phase_form(sigma_r, np.asarray(weights, dtype=float)))
    theta = math.atan2(vec[1, 0], vec[0, 0]) % math.pi
    return theta, float(lam[0])


def homodyne_value(sigma_r: np.ndarray, lo: LOConfig) -> tuple[float, float]:
    """Measured noise (vacuum units, given a vacuum-normalised ``sigma_r``) and phase used."""
    if lo.scanning:
        return best_phase(sigma_r, lo.weights)
    w = quadrature_direction(lo.phase, lo.weights)
    return lo.phase, float(w @ sigma_r @ w)


@dataclass(frozen=True, eq=False)
class HomodyneSpectrum:
    grid: FrequencyGrid
    values: np.ndarray
    phases: np.ndarray

    @property
    def db(self) -> np.ndarray:
        return to_db(self.values)


def hd_spectrum(
    model: InteractionModel,
    lo: LOConfig,
    grid: FrequencyGrid | Sequence[float],
    *,
    normalization: Normalization | str = Normalization.SHOT_NOISE_UNITY,
    modes: Sequence[int] | None = None,
    require_stable: bool = True,
) -> HomodyneSpectrum:
    """Noise seen by homodyne detection with the given LO, relative to shot noise."""
    grid = grid if isinstance(grid, FrequencyGrid) else FrequencyGrid(tuple(grid))
    _ensure_stable(model, require_stable)

    def one(w):
        _, sigma_r = _covariance(model, w, normalization, modes, False)
        if sigma_r.shape[0] // 2 != len(lo.mode_weights):
            raise ValueError("LO weights do not match the number of (selected) modes")
        theta, value = homodyne_value(sigma_r, lo)
        return value, theta

    out = map_grid(one, grid.points)
    return HomodyneSpectrum(grid, np.array([o[0] for o in out]), np.array([o[1] for o in out]))


@dataclass(frozen=True, eq=False)
class HomodyneOptimum:
    omega: float
    weights: np.ndarray
    theta: float
    value: float
    lower_bound: float
    restart_values: tuple = field(default=())

    @property
    def db(self) -> float:
        return float(to_db(self.value))

    def lo(self) -> LOConfig:
        return LOConfig(tuple(self.weights), self.theta)


def _cone_value(sigma_r: np.ndarray, theta: float):
    n = sigma_r.shape[0] // 2
    proj = np.vstack([math.cos(theta) * np.eye(n), math.sin(theta) * np.eye(n)])
    form = proj.T @ sigma_r @ proj
    lam, vec = np.linalg.eigh(0.5 * (form + form.T))
    return float(lam[0]), vec[:, 0]


def _alternate(sigma_r: np.ndarray, theta: float, max_iter: int = 2000):
    value = math.inf
    for _ in range(max_iter):
        new_value, weights = _cone_value(sigma_r, theta)
        theta, new_value = best_phase(sigma_r, weights)
        if value - new_value <= 1e-15 * max(1.0, abs(new_value)):
            value = new_value
            break
        value = new_value
    # polish in the single remaining direction
    res = minimize_scalar(
        lambda t: _cone_value(sigma_r, t)[0],
        bounds=(theta - 0.05, theta + 0.05),
        method="bounded",
        options={"xatol": 1e-13},
    )
    if res.fun < value:
        theta = float(res.x)
    value, weights = _cone_value(sigma_r, theta)
    if weights[np.argmax(np.abs(weights))] < 0:
        weights = -weights
    return theta % math.pi, value, weights


def _scan_minima(sigma_r: np.ndarray, points: int = 360):
    thetas = np.linspace(0.0, math.pi, points, endpoint=False)
    values = np.array([_cone_value(sigma_r, t)[0] for t in thetas])
    left, right = np.roll(values, 1), np.roll(values, -1)
    return thetas[(values <= left) & (values <= right)]


def best_over_cone(sigma_r: np.ndarray, *, restarts: int = 8, seed: int = 0):
    """Minimise ``w^T sigma_r w`` over ``w = (cos t u | sin t u)``, ``|u| = 1``.

    Alternates exact minimisation over the weights (lowest eigenvector of
    an ``N x N`` form) and over the phase (lowest eigenvector of a 2x2 form).
    The landscape in the phase can have several local minima, so the
    alternation is started from ``restarts`` random phases and from every
    local minimum of a 360-point phase scan; the best end point wins.

    Returns:
        tuple: ``(theta, value, weights, restart_values)`` where
        ``restart_values`` holds the end points of the random restarts.
    """
    rng = np.random.default_rng(seed)
    random_runs = [_alternate(sigma_r, float(t)) for t in rng.uniform(0.0, math.pi, size=restarts)]
    scan_runs = [_alternate(sigma_r, float(t)) for t in _scan_minima(sigma_r)]
    theta, value, weights = min(random_runs + scan_runs, key=lambda r: r[1])
    return theta, value, weights, tuple(r[1] for r in random_runs)


def hd_best(
    model: InteractionModel,
    omega: float,
    *,
    normalization: Normalization | str = Normalization.SHOT_NOISE_UNITY,
    modes: Sequence[int] | None = None,
    restarts: int = 8,
    seed: int = 0,
    require_stable: bool = True,
) -> HomodyneOptimum:
    """Best homodyne measurement at one frequency over LO weights and phase.

    The returned ``lower_bound`` is ``lambda_min(sigma_R)``, which no
    constrained direction can beat.
    """
    _, sigma_r = _covariance(model, omega, normalization, modes, require_stable)
    theta, value, weights, runs = best_over_cone(sigma_r, restarts=restarts, seed=seed)
    lower = float(np.linalg.eigvalsh(sigma_r)[0])
    return HomodyneOptimum(float(omega), weights, theta, value, lower, runs)


@dataclass(frozen=True)
class HiddenReport:
    omega: float
    optimal_db: float
    hd_db: float
    fraction: float
    hidden_share: float
    variance_fraction: float
    lo_weights: tuple
    lo_phase: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def hidden_report(
    model: InteractionModel,
    omega: float,
    *,
    normalization: Normalization | str = Normalization.SHOT_NOISE_UNITY,
    modes: Sequence[int] | None = None,
    restarts: int = 8,
    seed: int = 0,
    require_stable: bool = True,
) -> HiddenReport:
    """How much of the optimal squeezing homodyne detection recovers.

    ``fraction`` is the ratio of dB values ``hd_db / optimal_db`` and
    ``hidden_share = 1 - fraction``. ``variance_fraction`` gives the same
    comparison on linear noise reduction, ``(1 - V_hd) / (1 - V_opt)``.

    Raises:
        NoSqueezingError: the optimum is not below shot noise.
    """
    opt = optimal_value(model, omega, normalization=normalization, modes=modes, require_stable=require_stable)
    if opt >= 1.0:
        raise NoSqueezingError(f"no squeezing at omega={omega:g} (optimal {to_db(opt):.3g} dB)")
    best = hd_best(
        model, omega, normalization=normalization, modes=modes,
        restarts=restarts, seed=seed, require_stable=require_stable,
    )
    opt_db = float(to_db(opt))
    frac = best.db / opt_db
    return HiddenReport(
        float(omega),
        opt_db,
        best.db,
        frac,
        1.0 - frac,
        (1.0 - best.value) / (1.0 - opt),
        tuple(best.weights.tolist()),
        best.theta,
    )


# --- combined spectrum -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SqueezingSpectrum:
    grid: FrequencyGrid
    optimal_db: np.ndarray
    hd_db: np.ndarray
    lo_phase: np.ndarray
    hidden_fraction: np.ndarray
    lo: LOConfig | None = None

    def rows(self):
        for i, w in enumerate(self.grid.points):
            yield w, self.optimal_db[i], self.hd_db[i], self.hidden_fraction[i]


def squeezing_spectrum(
    model: InteractionModel,
    grid: FrequencyGrid | Sequence[float],
    lo: LOConfig | None = None,
    *,
    lo_omega: float | None = None,
    normalization: Normalization | str = Normalization.SHOT_NOISE_UNITY,
    modes: Sequence[int] | None = None,
    seed: int = 0,
    require_stable: bool = True,
) -> SqueezingSpectrum:
    """Optimal and homodyne squeezing side by side.

    With ``lo_omega`` set, whatever ``lo`` leaves open (the weights when
    ``lo`` is None, the phase when it scans) is optimised once at that
    frequency and then held fixed. Without it a scanning ``lo`` is
    re-optimised in phase at every frequency, and ``lo=None`` re-optimises
    weights and phase at every frequency.
    """
    grid = grid if isinstance(grid, FrequencyGrid) else FrequencyGrid(tuple(grid))
    _ensure_stable(model, require_stable)
    if lo_omega is not None:
        if lo is None:
            lo = hd_best(
                model, lo_omega, normalization=normalization, modes=modes, seed=seed, require_stable=False
            ).lo()
        elif lo.scanning:
            _, sigma_r = _covariance(model, lo_omega, normalization, modes, False)
            lo = LOConfig(lo.mode_weights, best_phase(sigma_r, lo.weights)[0])

    optimal = optimal_spectrum(model, grid.points, normalization=normalization, modes=modes, require_stable=False)
    if lo is not None:
        hd = hd_spectrum(model, lo, grid, normalization=normalization, modes=modes, require_stable=False)
        hd_values, phases = hd.values, hd.phases
    else:
        best = map_grid(
            lambda w: hd_best(
                model, w, normalization=normalization, modes=modes, seed=seed, require_stable=False
            ),
            grid.points,
        )
        hd_values = np.array([b.value for b in best])
        phases = np.array([b.theta for b in best])
    hd_db = to_db(hd_values)
    with np.errstate(divide="ignore", invalid="ignore"):
        hidden = np.where(optimal < 0.0, 1.0 - hd_db / optimal, np.nan)
    return SqueezingSpectrum(grid, optimal, hd_db, phases, hidden, lo)
