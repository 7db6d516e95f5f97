"""Shared strategies and hypothesis settings."""

from __future__ import annotations

import numpy as np
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from treecumulants.generators import random_table, random_theta, random_tree

settings.register_profile(
    "repo", deadline=None, max_examples=40, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@st.composite
def trees(draw, min_leaves: int = 2, max_leaves: int = 7, trivalent: bool | None = None):
    n = draw(st.integers(min_leaves, max_leaves))
    tri = draw(st.booleans()) if trivalent is None else trivalent
    return random_tree(n, np.random.default_rng(draw(seeds)), trivalent=tri)


@st.composite
def tree_and_theta(draw, min_leaves: int = 2, max_leaves: int = 6, trivalent: bool | None = None):
    t = draw(trees(min_leaves, max_leaves, trivalent))
    return t, random_theta(t, np.random.default_rng(draw(seeds)))


@st.composite
def tables(draw, min_n: int = 1, max_n: int = 5):
    n = draw(st.integers(min_n, max_n))
    return random_table(n, np.random.default_rng(draw(seeds)))
