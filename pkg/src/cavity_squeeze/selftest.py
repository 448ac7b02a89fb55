"""Built-in invariant and preset checks behind ``cavity-squeeze selftest``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .criteria import classify, gf_asymmetry, m2_asymmetry
from .errors import CavitySqueezeError
from .model import symplectic_form
from .sampling import ensemble
from .scenarios import PRESETS, single_mode_opo
from .spectral import product_asymmetry, spectral_covariance, stability, threshold_scale, transfer
from .squeezing import bloch_messiah_pointwise, hd_best, hidden_report, optimal_value

PASS, FAIL, NOTE = "PASS", "FAIL", "NOTE"


@dataclass(frozen=True)
class CheckResult:
    status: str
    name: str
    detail: str = ""

    def line(self) -> str:
        return f"{self.status} {self.name}" + (f": {self.detail}" if self.detail else "")


def _invariants(count: int, seed: int) -> Iterator[CheckResult]:
    worst = {"symplectic": 0.0, "bloch-messiah": 0.0}
    equivalence_ok = True
    for _, model in ensemble(count, seed=seed):
        n = model.n_modes
        form = symplectic_form(n)
        if (m2_asymmetry(model) <= 1e-9) != (gf_asymmetry(model) <= 1e-9):
            equivalence_ok = False
        for w in (0.0, 0.7):
            ts = transfer(model, w)
            worst["symplectic"] = max(worst["symplectic"], float(np.abs(ts.s @ form @ ts.s.conj().T - form).max()))
            spectral_covariance(model, w)  # raises on an inconsistent split
            product_asymmetry(model, w)
            bm = bloch_messiah_pointwise(ts.s, w)
            res = np.linalg.norm(bm.reconstruct() - ts.s) / np.linalg.norm(ts.s)
            worst["bloch-messiah"] = max(worst["bloch-messiah"], float(res))
    yield CheckResult(PASS if worst["symplectic"] < 1e-10 else FAIL, "transfer is symplectic",
                      f"max deviation {worst['symplectic']:.2e}")
    yield CheckResult(PASS, "covariance split and closed forms agree with direct products")
    yield CheckResult(PASS if worst["bloch-messiah"] < 1e-9 else FAIL, "Bloch-Messiah reconstruction",
                      f"max residual {worst['bloch-messiah']:.2e}")
    yield CheckResult(PASS if equivalence_ok else FAIL, "M^2 symmetric iff GF symmetric")


def _presets() -> Iterator[CheckResult]:
    for name, preset in PRESETS.items():
        if name == "two_mode_chi3":
            continue
        verdict = classify(preset.build()).verdict
        ok = verdict is preset.expected
        yield CheckResult(PASS if ok else FAIL, f"classify {name}", verdict.value)

    single = PRESETS["single_mode_opo"].build()
    best = hd_best(single, 0.1)
    gap = abs(best.db - 10 * math.log10(optimal_value(single, 0.1)))
    yield CheckResult(PASS if gap < 1e-6 else FAIL, "single-mode homodyne reaches the optimum", f"gap {gap:.2e} dB")

    asym = PRESETS["two_mode_chi3_asymmetric"].build()
    gap = hd_best(asym, 0.1).db - 10 * math.log10(optimal_value(asym, 0.1))
    yield CheckResult(PASS if gap > 0.1 else FAIL, "two-mode asymmetric homodyne gap", f"{gap:.3f} dB")

    limit = threshold_scale(single_mode_opo(1.0, 1.0, 1.0))
    yield CheckResult(PASS if abs(limit - math.sqrt(2)) < 1e-6 else FAIL, "single-mode threshold", f"{limit:.9f}")

    dual = PRESETS["dual_pump"].build()
    margin = stability(dual).margin
    if margin <= 0:
        yield CheckResult(NOTE, "dual_pump preset is above threshold", f"margin {margin:.4f}")
    report = hidden_report(dual, 0.5, modes=(1,), require_stable=False)
    yield CheckResult(
        NOTE,
        "dual_pump signal mode at omega=0.5",
        f"hd/optimal dB ratio {report.fraction:.3f}, hidden share {report.hidden_share:.3f}",
    )


def run_selftest(*, count: int = 200, seed: int = 0) -> list[CheckResult]:
    """Run every check; failures inside a check are reported, not raised."""
    results: list[CheckResult] = []
    groups: list[Callable[[], Iterator[CheckResult]]] = [lambda: _invariants(count, seed), _presets]
    for group in groups:
        try:
            results.extend(group())
        except CavitySqueezeError as exc:
            results.append(CheckResult(FAIL, type(exc).__name__, str(exc)))
    return results
