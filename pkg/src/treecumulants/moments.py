"""
Coordinate changes between probabilities, moments and tree cumulants.

Every table is dense over the subsets of ``[n]``. A subset ``I`` is stored at
the bitmask index with leaf ``i`` on bit ``i - 1``. Tables hold ``float64``
values, or Python objects (typically :class:`fractions.Fraction`) for exact
evaluation; every transform here works with either.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import sqrt
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT, MAX_DENSE_LEAVES
from .poset import build_poset, classical_mobius_top, enumerate_set_partitions
from .tree import TreeTopology

__all__ = [
    "ProbabilityTable",
    "NoncentralMoments",
    "CentralMoments",
    "TreeCumulants",
    "CorrelationCoords",
    "mask_of",
    "leaves_of",
    "alpha_string",
    "p_to_lambda",
    "lambda_to_p",
    "lambda_to_mu",
    "mu_to_lambda",
    "mu_to_kappa",
    "kappa_to_mu",
    "classical_cumulant",
    "kappa_to_rho",
    "rho_to_kappa",
    "p_to_mu",
    "validate",
]


def mask_of(leaves: Iterable[int]) -> int:
    """Bitmask of a set of 1-based leaf labels."""
    m = 0
    for i in leaves:
        m |= 1 << (i - 1)
    return m


def leaves_of(mask: int) -> tuple[int, ...]:
    """Sorted 1-based leaf labels of a bitmask."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def alpha_string(mask: int, n: int) -> str:
    """0/1 pattern ``alpha_1 ... alpha_n`` (leaf 1 first)."""
    return "".join("1" if mask >> k & 1 else "0" for k in range(n))


def _freeze(values, length: int | None = None) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype != object:
        arr = arr.astype(np.float64)
    else:
        arr = arr.copy()
    if arr.ndim != 1 or (length is not None and arr.shape[0] != length):
        raise ValueError(f"expected a flat table of length {length}, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


def _check_n(n: int) -> int:
    if not 1 <= n <= MAX_DENSE_LEAVES:
        raise ValueError(f"leaf count {n} outside 1..{MAX_DENSE_LEAVES}")
    return n


def _n_from_length(length: int) -> int:
    n = length.bit_length() - 1
    if length != 1 << n:
        raise ValueError(f"table length {length} is not a power of two")
    return _check_n(n)


@dataclass(frozen=True, eq=False)
class ProbabilityTable:
    """Joint distribution of ``n`` binary leaves, ``values[mask] = p_alpha``."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        _check_n(self.n)
        object.__setattr__(self, "values", _freeze(self.values, 1 << self.n))

    @classmethod
    def from_values(cls, values) -> "ProbabilityTable":
        arr = np.asarray(values)
        return cls(_n_from_length(arr.shape[0]), arr)

    def marginal_mean(self, i: int):
        """``P(X_i = 1)``."""
        bit = 1 << (i - 1)
        return sum(v for m, v in enumerate(self.values) if m & bit)


@dataclass(frozen=True, eq=False)
class NoncentralMoments:
    """``values[mask] = E[prod_{i in I} X_i]``."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        _check_n(self.n)
        object.__setattr__(self, "values", _freeze(self.values, 1 << self.n))

    @property
    def means(self) -> np.ndarray:
        return _freeze([self.values[1 << k] for k in range(self.n)])


@dataclass(frozen=True, eq=False)
class CentralMoments:
    """Leaf means ``lambda_i`` and central moments ``mu_I``."""

    n: int
    means: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        _check_n(self.n)
        object.__setattr__(self, "means", _freeze(self.means, self.n))
        object.__setattr__(self, "mu", _freeze(self.mu, 1 << self.n))

    def __getitem__(self, leaves: Iterable[int]):
        return self.mu[mask_of(leaves)]

    @property
    def mu_bar(self) -> np.ndarray:
        """Leaf mean offsets ``1 - 2 lambda_i``."""
        return _freeze([1 - 2 * x for x in self.means])


@dataclass(frozen=True, eq=False)
class TreeCumulants:
    """Leaf means and tree cumulants ``kappa_I`` relative to ``tree``.

    Entries for ``|I| <= 1`` are zero by convention.
    """

    tree: TreeTopology
    n: int
    means: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        _check_n(self.n)
        if self.tree.require_model_tree() != self.n:
            raise ValueError("tree leaf count does not match the table")
        object.__setattr__(self, "means", _freeze(self.means, self.n))
        object.__setattr__(self, "kappa", _freeze(self.kappa, 1 << self.n))

    def __getitem__(self, leaves: Iterable[int]):
        return self.kappa[mask_of(leaves)]

    @property
    def mu_bar(self) -> np.ndarray:
        return _freeze([1 - 2 * x for x in self.means])


@dataclass(frozen=True, eq=False)
class CorrelationCoords:
    """Leaf offsets ``rho_bar_i`` and correlations ``rho_I`` (zero for ``|I| <= 1``)."""

    n: int
    rho_bar: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        _check_n(self.n)
        object.__setattr__(self, "rho_bar", _freeze(self.rho_bar, self.n))
        object.__setattr__(self, "rho", _freeze(self.rho, 1 << self.n))

    def __getitem__(self, leaves: Iterable[int]):
        return self.rho[mask_of(leaves)]


# ---------------------------------------------------------------------- #
# per-bit transforms


def _work_copy(values: np.ndarray) -> np.ndarray:
    return np.array(values, dtype=values.dtype)


def _bitwise(values: np.ndarray, n: int, step) -> np.ndarray:
    a = _work_copy(values)
    for k in range(n):
        step(a.reshape(-1, 2, 1 << k), k)
    return a


def p_to_lambda(p: ProbabilityTable) -> NoncentralMoments:
    """Superset sums ``lambda_alpha = sum_{beta >= alpha} p_beta``."""

    def step(a, _):
        a[:, 0, :] += a[:, 1, :]

    return NoncentralMoments(p.n, _bitwise(p.values, p.n, step))


def lambda_to_p(lam: NoncentralMoments) -> ProbabilityTable:
    """Inverse of :func:`p_to_lambda` (alternating superset sums).

    The result is not validated; see :func:`validate`.
    """

    def step(a, _):
        a[:, 0, :] -= a[:, 1, :]

    return ProbabilityTable(lam.n, _bitwise(lam.values, lam.n, step))


def lambda_to_mu(lam: NoncentralMoments) -> CentralMoments:
    """Center every coordinate at its mean."""
    means = lam.means

    def step(a, k):
        a[:, 1, :] -= means[k] * a[:, 0, :]

    return CentralMoments(lam.n, means, _bitwise(lam.values, lam.n, step))


def mu_to_lambda(m: CentralMoments) -> NoncentralMoments:
    """Inverse of :func:`lambda_to_mu`."""
    means = m.means

    def step(a, k):
        a[:, 1, :] += means[k] * a[:, 0, :]

    return NoncentralMoments(m.n, _bitwise(m.mu, m.n, step))


def p_to_mu(p: ProbabilityTable) -> CentralMoments:
    return lambda_to_mu(p_to_lambda(p))


def _block_product(table: np.ndarray, blocks) -> object:
    out = 1
    for b in blocks:
        out = out * table[mask_of(b)]
    return out


def _mobius_sum(t: TreeTopology, table: np.ndarray, n: int, inverse: bool) -> np.ndarray:
    out = np.zeros(1 << n, dtype=table.dtype)
    if table.dtype == object:
        out[:] = 0
    for mask in range(1 << n):
        leaves = leaves_of(mask)
        if len(leaves) < 2:
            continue
        poset = build_poset(t, leaves)
        if inverse:
            acc = 0
            for elem in poset.elements:
                acc = acc + _block_product(table, elem.blocks)
        else:
            weights = poset.mobius_to_top()
            acc = 0
            for w, elem in zip(weights, poset.elements):
                if w:
                    acc = acc + int(w) * _block_product(table, elem.blocks)
        out[mask] = acc
    return out


def mu_to_kappa(t: TreeTopology, m: CentralMoments) -> TreeCumulants:
    """
    Tree cumulants of central moments relative to ``t``.

    ``kappa_I = sum_{pi in Pi_T(I)} m(pi, top) prod_{B in pi} mu_B`` for
    ``|I| >= 2``.

    Raises
    ------
    ValueError
        If the leaf labels of ``t`` are not ``1..n``.
    PosetSizeError
        If some spanned subtree is too large to enumerate.
    """
    if t.require_model_tree() != m.n:
        raise ValueError("tree leaf count does not match the moments")
    return TreeCumulants(t, m.n, m.means, _mobius_sum(t, m.mu, m.n, inverse=False))


def kappa_to_mu(k: TreeCumulants) -> CentralMoments:
    """Inverse of :func:`mu_to_kappa`: ``mu_I = sum_pi prod_B kappa_B``."""
    mu = _mobius_sum(k.tree, k.kappa, k.n, inverse=True)
    mu[0] = 1
    return CentralMoments(k.n, k.means, mu)


def classical_cumulant(m: CentralMoments, leaf_set: Iterable[int]):
    """Joint cumulant of the leaves in ``leaf_set`` from central moments."""
    leaf_set = sorted(leaf_set)
    if len(leaf_set) < 2:
        raise ValueError("classical cumulants need at least two leaves")
    acc = 0
    for part in enumerate_set_partitions(leaf_set):
        acc = acc + classical_mobius_top(part) * _block_product(m.mu, part.blocks)
    return acc


def _leaf_scales(mu_bar: Sequence) -> list[float]:
    scales = []
    for i, x in enumerate(mu_bar, start=1):
        if not x * x < 1:
            raise ValueError(f"leaf {i} has a degenerate margin (mean offset {x})")
        scales.append(sqrt(1 - x * x))
    return scales


def kappa_to_rho(k: TreeCumulants) -> CorrelationCoords:
    """
    Correlation coordinates ``rho_I = 2^|I| kappa_I / prod sqrt(1 - mu_bar_i^2)``.

    Raises
    ------
    ValueError
        If some leaf has ``mu_bar_i^2 >= 1``.
    """
    mb = [float(x) for x in k.mu_bar]
    scales = _leaf_scales(mb)
    rho = np.zeros(1 << k.n)
    for mask in range(1 << k.n):
        leaves = leaves_of(mask)
        if len(leaves) >= 2:
            denom = np.prod([scales[i - 1] for i in leaves])
            rho[mask] = 2 ** len(leaves) * float(k.kappa[mask]) / denom
    rho_bar = [2 * x / s for x, s in zip(mb, scales)]
    return CorrelationCoords(k.n, rho_bar, rho)


def rho_to_kappa(t: TreeTopology, r: CorrelationCoords) -> TreeCumulants:
    """Inverse of :func:`kappa_to_rho`."""
    mu_bar = [x / sqrt(4 + x * x) for x in r.rho_bar]
    scales = _leaf_scales(mu_bar)
    kappa = np.zeros(1 << r.n)
    for mask in range(1 << r.n):
        leaves = leaves_of(mask)
        if len(leaves) >= 2:
            kappa[mask] = r.rho[mask] * np.prod([scales[i - 1] for i in leaves]) / 2 ** len(leaves)
    return TreeCumulants(t, r.n, [(1 - x) / 2 for x in mu_bar], kappa)


def validate(table: ProbabilityTable | NoncentralMoments, tol: float = DEFAULT.simplex) -> bool:
    """
    Whether ``table`` is a valid probability table (or moment table of one).

    Probability tables need non-negative entries summing to one. Moment
    tables need ``lambda_empty = 1`` and entries in ``[0, 1]``; they are also
    mapped back to probabilities and checked there.
    """
    if isinstance(table, NoncentralMoments):
        v = np.asarray(table.values, dtype=float)
        if abs(v[0] - 1) > tol or v.min() < -tol or v.max() > 1 + tol:
            return False
        return validate(lambda_to_p(table), tol)
    v = np.asarray(table.values, dtype=float)
    return bool(v.min() >= -tol and abs(v.sum() - 1) <= tol)


def as_exact(values: Iterable) -> np.ndarray:
    """Object array of :class:`Fraction` values (floats converted exactly)."""
    return np.array([Fraction(x) for x in values], dtype=object)
