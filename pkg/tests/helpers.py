"""Shared strategies and bookkeeping for the test suite."""

import numpy as np
from hypothesis import strategies as st

from cavity_squeeze.sampling import KINDS, random_model

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


@st.composite
def stable_models(draw, sizes=(1, 2, 3, 4), kinds=KINDS):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.sampled_from(sizes))
    kind = draw(st.sampled_from(kinds))
    return random_model(np.random.default_rng(seed), n, kind)


frequencies = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)
