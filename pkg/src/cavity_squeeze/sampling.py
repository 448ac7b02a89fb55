"""Random below-threshold models for property checks."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .errors import NoThresholdFoundError
from .model import InteractionModel
from .spectral import threshold_scale

KINDS = ("generic", "equal_damping", "gf_symmetric", "f_zero", "decoupled", "diagonal")


def _hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)


def _complex_symmetric(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.T)


def random_model(
    rng: np.random.Generator,
    n_modes: int,
    kind: str = "generic",
    *,
    max_pump_fraction: float = 0.9,
) -> InteractionModel:
    """Draw a stable model of the requested structural family.

    Kinds:
        generic: Hermitian G, symmetric F, unequal damping.
        equal_damping: as generic with a single damping rate.
        gf_symmetric: real symmetric G, F a complex polynomial in G and a
            single damping rate, so the covariance is real.
        f_zero: no pair production.
        decoupled: uncoupled detuned single-mode squeezers.
        diagonal: ``G = 0`` and ``F = i D`` with real ``D``, so the drift
            matrix itself is diagonal.

    The pump matrix is scaled to a random fraction (at most
    ``max_pump_fraction``) of its threshold value.
    """
    n = n_modes
    if kind == "generic":
        g, f = _hermitian(rng, n), _complex_symmetric(rng, n)
        gamma = rng.uniform(0.5, 2.0, size=n)
    elif kind == "equal_damping":
        g, f = _hermitian(rng, n), _complex_symmetric(rng, n)
        gamma = np.full(n, rng.uniform(0.5, 2.0))
    elif kind == "gf_symmetric":
        a = rng.normal(size=(n, n))
        g = 0.5 * (a + a.T)
        coeffs = rng.normal(size=3) + 1j * rng.normal(size=3)
        f = coeffs[0] * np.eye(n) + coeffs[1] * g + coeffs[2] * g @ g
        f = 0.5 * (f + f.T)  # g @ g is symmetric only up to round-off
        gamma = np.full(n, rng.uniform(0.5, 2.0))
    elif kind == "f_zero":
        g, f = _hermitian(rng, n), np.zeros((n, n), complex)
        gamma = rng.uniform(0.5, 2.0, size=n)
    elif kind == "decoupled":
        g = np.diag(rng.normal(size=n))
        f = np.diag(rng.normal(size=n) + 1j * rng.normal(size=n))
        gamma = rng.uniform(0.5, 2.0, size=n)
    elif kind == "diagonal":
        g = np.zeros((n, n))
        f = 1j * np.diag(rng.normal(size=n))
        gamma = rng.uniform(0.5, 2.0, size=n)
    else:
        raise ValueError(f"unknown kind {kind!r}; choose from {KINDS}")

    model = InteractionModel(g, f, gamma)
    if not np.any(f):
        return model
    try:
        limit = threshold_scale(model, rtol=1e-6)
    except NoThresholdFoundError:
        limit = 1.0
    return model.with_f(f * limit * rng.uniform(0.1, max_pump_fraction))


def ensemble(
    count: int, *, seed: int = 0, sizes=(1, 2, 3, 4), kinds=KINDS
) -> Iterator[tuple[str, InteractionModel]]:
    """``count`` reproducible models cycling through sizes and kinds."""
    rng = np.random.default_rng(seed)
    for i in range(count):
        kind = kinds[i % len(kinds)]
        n = sizes[(i // len(kinds)) % len(sizes)]
        yield kind, random_model(rng, n, kind)
