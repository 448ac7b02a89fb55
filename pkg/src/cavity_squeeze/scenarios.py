"""Case-study models and parameter sweeps.

All rates are in units of the cavity damping ``gamma`` (default 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .criteria import DEFAULT_TOL, Classification, Verdict, classify, relative_imaginary_part
from .errors import CavitySqueezeError
from .model import InteractionModel
from .spectral import FrequencyGrid, map_grid


def single_mode_opo(delta: float = 1.0, g: float = 1.38, gamma: float = 1.0) -> InteractionModel:
    """Degenerate OPO: ``G = [delta]``, ``F = [i g]``."""
    return InteractionModel([[delta]], [[1j * g]], [gamma])


def optomech(
    delta: float = 1.0, omega_m: float = 1.0, g: float = 0.01, gamma: float = 1.0, gamma_m: float = 0.001
) -> InteractionModel:
    """Optical mode coupled to a mechanical oscillator with rate ``g``."""
    return InteractionModel(
        [[delta, g], [g, omega_m]],
        [[0.0, 2.0 * g], [2.0 * g, 0.0]],
        [gamma, gamma_m],
    )


def two_mode_chi3(
    g11: float = 1.0, g22: float = 0.8, g12: complex = 0.0, f12: complex = 1.31j, gamma: float = 1.0
) -> InteractionModel:
    """Two detuned modes with a cross pair-production term ``f12``."""
    return InteractionModel(
        [[g11, g12], [np.conj(g12), g22]],
        [[0.0, f12], [f12, 0.0]],
        [gamma, gamma],
    )


def dual_pump_three_mode(
    beta1: complex, beta2: complex, delta: float, gamma: float = 1.0, parasitic: bool = True
) -> InteractionModel:
    """Three modes (m, s, n) driven by two classical pumps.

    With ``parasitic`` the full set of four-wave-mixing couplings is kept,
    including the overall minus signs. Without it only the dual-pump pair
    production into the signal mode survives.
    """
    b1, b2 = complex(beta1), complex(beta2)
    diag = abs(b1) ** 2 + abs(b2) ** 2 - delta
    if parasitic:
        cross = b1 * b2.conjugate()
        g = -np.array(
            [[diag, cross, 0.0], [cross.conjugate(), diag, cross], [0.0, cross.conjugate(), diag]]
        )
        f = -np.array(
            [[0.0, b1**2, 2 * b1 * b2], [b1**2, b1 * b2, b2**2], [2 * b1 * b2, b2**2, 0.0]]
        )
    else:
        g = diag * np.eye(3)
        f = -np.diag([0.0, b1 * b2, 0.0])
    return InteractionModel(g, f, [gamma] * 3)


def pump_amplitudes(pump_product: float, net_detuning: float, ratio: float = 1.0):
    """Real pump amplitudes and detuning from the quoted combinations.

    Returns ``(beta1, beta2, delta)`` with ``beta1 * beta2 = pump_product``,
    ``beta2 / beta1 = ratio`` and ``beta1**2 + beta2**2 - delta = net_detuning``.
    """
    if pump_product < 0 or ratio <= 0:
        raise ValueError("pump_product must be >= 0 and ratio > 0")
    beta1 = math.sqrt(pump_product / ratio)
    beta2 = math.sqrt(pump_product * ratio)
    return beta1, beta2, beta1**2 + beta2**2 - net_detuning


def dual_pump(
    pump_product: float = 0.46,
    net_detuning: float = 0.15,
    ratio: float = 1.0,
    gamma: float = 1.0,
    parasitic: bool = True,
) -> InteractionModel:
    beta1, beta2, delta = pump_amplitudes(pump_product, net_detuning, ratio)
    return dual_pump_three_mode(beta1, beta2, delta, gamma, parasitic)


@dataclass(frozen=True)
class ScenarioPreset:
    """A named case study with its default parameters.

    Attributes:
        reference_omega: frequency at which the LO is optimised.
        reduce_modes: modes kept when reporting squeezing (``None`` for all).
        expected: verdict for the default parameters.
    """

    name: str
    builder: Callable[..., InteractionModel]
    params: Mapping[str, object]
    reference_omega: float
    expected: Verdict
    reduce_modes: tuple | None = None
    description: str = ""

    def build(self, **overrides) -> InteractionModel:
        unknown = set(overrides) - set(self.params)
        if unknown:
            raise KeyError(f"unknown parameter(s) for {self.name}: {sorted(unknown)}")
        return self.builder(**{**self.params, **overrides})


PRESETS: dict[str, ScenarioPreset] = {
    p.name: p
    for p in (
        ScenarioPreset(
            "single_mode_opo", single_mode_opo, {"delta": 1.0, "g": 1.38, "gamma": 1.0},
            0.1, Verdict.REAL_COVARIANCE, description="detuned degenerate OPO",
        ),
        ScenarioPreset(
            "optomech", optomech,
            {"delta": 1.0, "omega_m": 1.0, "g": 0.01, "gamma": 1.0, "gamma_m": 0.001},
            1.0, Verdict.COMPLEX_COVARIANCE, description="optomechanical cavity",
        ),
        ScenarioPreset(
            "two_mode_chi3_symmetric", two_mode_chi3,
            {"g11": 1.0, "g22": 1.0, "g12": 0.0, "f12": 1.38j, "gamma": 1.0},
            0.1, Verdict.REAL_COVARIANCE, description="two-mode OPO, equal detunings",
        ),
        ScenarioPreset(
            "two_mode_chi3_asymmetric", two_mode_chi3,
            {"g11": 1.0, "g22": 0.8, "g12": 0.0, "f12": 1.31j, "gamma": 1.0},
            0.1, Verdict.COMPLEX_COVARIANCE, description="two-mode OPO, unequal detunings",
        ),
        ScenarioPreset(
            "dual_pump", dual_pump,
            {"pump_product": 0.46, "net_detuning": 0.15, "ratio": 1.0, "gamma": 1.0, "parasitic": True},
            0.5, Verdict.COMPLEX_COVARIANCE, (1,), "dual-pump microring with parasitic mixing",
        ),
        ScenarioPreset(
            "dual_pump_suppressed", dual_pump,
            {"pump_product": 0.46, "net_detuning": 0.15, "ratio": 1.0, "gamma": 1.0, "parasitic": False},
            0.5, Verdict.REAL_COVARIANCE, (1,), "dual-pump microring, parasitic mixing suppressed",
        ),
    )
}
PRESETS["two_mode_chi3"] = PRESETS["two_mode_chi3_asymmetric"]


def get_preset(name: str) -> ScenarioPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(PRESETS)}") from None


def default_grid() -> FrequencyGrid:
    return FrequencyGrid.linspace(0.0, 3.0, 31)


@dataclass(frozen=True)
class SweepPoint:
    value: object
    classification: Classification | None = None
    max_rel_sigma_i: float | None = None
    error: str | None = None

    def as_dict(self) -> dict:
        out = {"value": _plain(self.value), "error": self.error}
        if self.classification is not None:
            out.update(self.classification.as_dict())
        out["max_rel_sigma_i"] = self.max_rel_sigma_i
        return out


def _plain(x):
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def sweep(
    preset: ScenarioPreset | str,
    param: str,
    values: Sequence,
    *,
    grid: FrequencyGrid | None = None,
    tol: float = DEFAULT_TOL,
    fixed: Mapping[str, object] | None = None,
) -> list[SweepPoint]:
    """Classify the preset along one parameter and measure ``max ||sigma_I|| / ||sigma||``.

    Failures at individual points (invalid or unstable models) are recorded
    on the point and the sweep carries on.
    """
    preset = get_preset(preset) if isinstance(preset, str) else preset
    if param not in preset.params:
        raise KeyError(f"{preset.name} has no parameter {param!r}")
    grid = grid or default_grid()
    fixed = dict(fixed or {})

    def one(value) -> SweepPoint:
        try:
            model = preset.build(**{**fixed, param: value})
            result = classify(model, tol)
            ratio = max(relative_imaginary_part(model, w) for w in grid)
            return SweepPoint(value, result, ratio)
        except (CavitySqueezeError, ValueError) as exc:
            return SweepPoint(value, error=f"{type(exc).__name__}: {exc}")

    return map_grid(one, list(values))
