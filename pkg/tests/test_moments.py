from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from treecumulants import fixtures as fx
from treecumulants import oracle
from treecumulants.generators import product_table, random_table
from treecumulants.moments import (
    CentralMoments,
    NoncentralMoments,
    ProbabilityTable,
    TreeCumulants,
    alpha_string,
    classical_cumulant,
    kappa_to_mu,
    kappa_to_rho,
    lambda_to_mu,
    lambda_to_p,
    leaves_of,
    mask_of,
    mu_to_kappa,
    mu_to_lambda,
    p_to_lambda,
    p_to_mu,
    rho_to_kappa,
    validate,
)
from treecumulants.params import model_forward
from treecumulants.tree import parse_newick

from conftest import seeds, tables, trees


def _mask(alpha: str) -> int:
    return int(alpha[::-1], 2)


@pytest.fixture(scope="module")
def quartet():
    theta = fx.quartet_theta()
    p = model_forward(theta)
    lam = p_to_lambda(p)
    mu = lambda_to_mu(lam)
    return theta.tree, p, lam, mu, mu_to_kappa(theta.tree, mu)


@pytest.fixture(scope="module")
def quartet_exact():
    theta = fx.quartet_theta(exact=True)
    p = model_forward(theta)
    mu = p_to_mu(p)
    return p, mu, mu_to_kappa(theta.tree, mu)


def test_mask_helpers():
    assert mask_of([1, 3]) == 0b101
    assert leaves_of(0b1010) == (2, 4)
    assert alpha_string(0b0011, 4) == "1100"
    assert _mask("0011") == mask_of([3, 4])


@pytest.mark.parametrize("alpha,p,lam,kappa", fx.QUARTET_TABLE)
def test_quartet_table_row(quartet, alpha, p, lam, kappa):
    _, pt, lt, _, kt = quartet
    m = _mask(alpha)
    assert pt.values[m] == pytest.approx(p, abs=5e-5)
    assert lt.values[m] == pytest.approx(lam, abs=5e-5)
    if bin(m).count("1") >= 2:
        assert kt.kappa[m] == pytest.approx(kappa, abs=5e-5)


def test_quartet_p_from_lambda(quartet):
    _, p, lam, _, _ = quartet
    assert np.allclose(lambda_to_p(lam).values, p.values, atol=1e-15)


def test_quartet_mu34(quartet):
    _, _, lam, mu, _ = quartet
    assert mu[[3, 4]] == pytest.approx(0.37 - 0.58 * 0.58, abs=1e-12)
    assert mu[[3, 4]] == pytest.approx(0.0336, abs=1e-12)


def test_quartet_exact_values(quartet_exact):
    p, mu, k = quartet_exact
    assert p.values[0] == Fraction(2221, 50000)
    assert p.values[15] == Fraction(9373, 50000)
    assert k[[1, 2, 3, 4]] == Fraction(48, 78125)
    assert mu[[1, 2, 3, 4]] == Fraction(132, 78125)
    assert k[[1, 2]] == Fraction(4, 125) and k[[3, 4]] == Fraction(21, 625)
    # only partitions without singleton blocks survive
    assert mu[[1, 2, 3, 4]] == k[[1, 2, 3, 4]] + k[[1, 2]] * k[[3, 4]]


def test_quartet_exact_round_trip(quartet_exact):
    _, mu, k = quartet_exact
    back = kappa_to_mu(k)
    assert all(a == b for a, b in zip(back.mu, mu.mu))


def test_point_mass_all_ones():
    values = np.zeros(8)
    values[7] = 1
    assert np.array_equal(p_to_lambda(ProbabilityTable(3, values)).values, np.ones(8))


def test_uniform_two_bits():
    lam = p_to_lambda(ProbabilityTable(2, np.full(4, 0.25)))
    assert list(lam.values) == [1, 0.5, 0.5, 0.25]
    mu = lambda_to_mu(lam)
    assert mu[[1, 2]] == 0


def test_single_bit():
    p = lambda_to_p(NoncentralMoments(1, [1.0, 0.3]))
    assert p.values[1] == pytest.approx(0.3) and p.values[0] == pytest.approx(0.7)


def test_independent_fair_bits_lambda():
    n = 3
    mu = np.zeros(1 << n)
    mu[0] = 1
    lam = mu_to_lambda(CentralMoments(n, [0.5] * n, mu))
    assert np.allclose(lam.values, [2.0 ** -bin(m).count("1") for m in range(1 << n)])


def test_zero_cumulants_give_zero_moments():
    t = fx.quartet_tree()
    mu = kappa_to_mu(TreeCumulants(t, 4, [0.3] * 4, np.zeros(16)))
    assert mu.mu[0] == 1 and not np.any(mu.mu[1:])


def test_tripod_third_cumulant_is_third_moment():
    t = parse_newick(fx.TRIPOD_NEWICK)
    p = random_table(3, np.random.default_rng(4))
    mu = p_to_mu(p)
    assert mu_to_kappa(t, mu)[[1, 2, 3]] == pytest.approx(mu[[1, 2, 3]], abs=1e-15)


def test_tree_mismatch_rejected(quartet):
    _, _, _, mu, _ = quartet
    with pytest.raises(ValueError):
        mu_to_kappa(parse_newick(fx.TRIPOD_NEWICK), mu)


def test_classical_cumulant_small_sets(quartet):
    _, _, _, mu, _ = quartet
    assert classical_cumulant(mu, [1, 2]) == pytest.approx(mu[[1, 2]])
    assert classical_cumulant(mu, [1, 2, 4]) == pytest.approx(mu[[1, 2, 4]])
    expected = (mu[[1, 2, 3, 4]] - mu[[1, 2]] * mu[[3, 4]] - mu[[1, 3]] * mu[[2, 4]]
                - mu[[1, 4]] * mu[[2, 3]])
    assert classical_cumulant(mu, [1, 2, 3, 4]) == pytest.approx(expected, abs=1e-15)
    with pytest.raises(ValueError):
        classical_cumulant(mu, [1])


def test_rho_perfect_correlation():
    t = parse_newick("(1,2);")
    kappa = np.zeros(4)
    kappa[3] = 0.25
    rho = kappa_to_rho(TreeCumulants(t, 2, [0.5, 0.5], kappa))
    assert rho[[1, 2]] == pytest.approx(1.0)
    assert list(rho.rho_bar) == [0.0, 0.0]


def test_rho_zero_cumulants():
    t = fx.quartet_tree()
    rho = kappa_to_rho(TreeCumulants(t, 4, [0.3] * 4, np.zeros(16)))
    assert not np.any(rho.rho)


def test_rho_is_correlation(quartet):
    _, _, lam, mu, k = quartet
    rho = kappa_to_rho(k)
    for i, j in combinations(range(1, 5), 2):
        li, lj = lam.values[mask_of([i])], lam.values[mask_of([j])]
        assert rho[[i, j]] == pytest.approx(mu[[i, j]] / np.sqrt(li * (1 - li) * lj * (1 - lj)), abs=1e-12)


def test_rho_round_trip(quartet):
    t, _, _, _, k = quartet
    back = rho_to_kappa(t, kappa_to_rho(k))
    assert np.allclose(back.kappa, k.kappa, atol=1e-14)
    assert np.allclose(back.means, k.means, atol=1e-14)


def test_rho_degenerate_margin():
    t = parse_newick("(1,2);")
    with pytest.raises(ValueError):
        kappa_to_rho(TreeCumulants(t, 2, [1.0, 0.5], np.zeros(4)))


def test_validate():
    assert validate(ProbabilityTable(1, [0.4, 0.6]))
    assert not validate(ProbabilityTable(1, [-0.1, 1.1]))
    assert not validate(ProbabilityTable(1, [0.4, 0.5]))
    assert validate(NoncentralMoments(2, [1, 0.5, 0.5, 0.25]))
    # entries in [0, 1] but p_00 = 1 - 0.9 - 0.9 + 0.1 < 0
    assert not validate(NoncentralMoments(2, [1, 0.9, 0.9, 0.1]))


def test_table_length_checked():
    with pytest.raises(ValueError):
        ProbabilityTable(2, [1.0, 0.0, 0.0])


# ---------------------------------------------------------------- properties


@given(tables(max_n=6))
def test_p_lambda_round_trip(p):
    assert np.allclose(lambda_to_p(p_to_lambda(p)).values, p.values, atol=1e-12)


@given(tables(max_n=6))
def test_lambda_mu_round_trip(p):
    lam = p_to_lambda(p)
    mu = lambda_to_mu(lam)
    assert mu.mu[0] == pytest.approx(1, abs=1e-12)
    assert all(abs(mu.mu[1 << k]) <= 1e-15 for k in range(p.n))
    assert np.allclose(mu_to_lambda(mu).values, lam.values, atol=1e-12)


@given(tables(max_n=6))
def test_moments_match_definition(p):
    lam, mu = oracle.moments_by_definition(np.asarray(p.values))
    assert np.allclose(p_to_lambda(p).values, lam, atol=1e-13)
    assert np.allclose(p_to_mu(p).mu, mu, atol=1e-13)


@given(trees(max_leaves=6), seeds)
def test_kappa_round_trip(t, seed):
    mu = p_to_mu(random_table(t.n_leaves, np.random.default_rng(seed)))
    k = mu_to_kappa(t, mu)
    assert np.allclose(kappa_to_mu(k).mu, mu.mu, atol=1e-12)


@given(trees(max_leaves=6), seeds)
def test_kappa_matches_brute_force(t, seed):
    mu = p_to_mu(random_table(t.n_leaves, np.random.default_rng(seed)))
    assert np.allclose(mu_to_kappa(t, mu).kappa, oracle.tree_cumulants_by_brute_force(t, mu.mu), atol=1e-13)


@given(trees(max_leaves=7), seeds)
def test_low_order_cumulants_are_moments(t, seed):
    mu = p_to_mu(random_table(t.n_leaves, np.random.default_rng(seed)))
    k = mu_to_kappa(t, mu)
    for m in range(1 << t.n_leaves):
        if 2 <= bin(m).count("1") <= 3:
            assert k.kappa[m] == pytest.approx(mu.mu[m], abs=1e-15)


@given(trees(min_leaves=3, max_leaves=6), seeds, st.data())
def test_triangularity(t, seed, data):
    n = t.n_leaves
    mu = p_to_mu(random_table(n, np.random.default_rng(seed)))
    target = data.draw(st.sampled_from([m for m in range(1 << n) if bin(m).count("1") >= 2]))
    delta = 1e-3
    bumped = np.array(mu.mu)
    bumped[target] += delta
    before = mu_to_kappa(t, mu).kappa
    after = mu_to_kappa(t, CentralMoments(n, mu.means, bumped)).kappa
    assert after[target] - before[target] == pytest.approx(delta, abs=1e-13)
    for m in range(1 << n):
        if m & target != target:
            assert after[m] == before[m]


@given(trees(min_leaves=2, max_leaves=6), seeds, st.data())
def test_split_zero(t, seed, data):
    rng = np.random.default_rng(seed)
    u, v = data.draw(st.sampled_from(sorted(t.edges)))
    side = [i for i in t.leaves if u not in t.path_nodes(v, i)]
    p = product_table(t.n_leaves, side, rng)
    k = mu_to_kappa(t, p_to_mu(p))
    assert abs(k.kappa[(1 << t.n_leaves) - 1]) <= 1e-12


@given(tables(min_n=2, max_n=6), st.data())
def test_classical_cumulant_matches_recursion(p, data):
    leaf_set = data.draw(st.sets(st.integers(1, p.n), min_size=2))
    mu = p_to_mu(p)
    assert classical_cumulant(mu, leaf_set) == pytest.approx(
        oracle.classical_cumulant_by_recursion(mu.mu, leaf_set), abs=1e-13)


@given(trees(min_leaves=2, max_leaves=6), seeds)
def test_correlations_bounded(t, seed):
    k = mu_to_kappa(t, p_to_mu(random_table(t.n_leaves, np.random.default_rng(seed))))
    rho = kappa_to_rho(k)
    for i, j in combinations(range(1, t.n_leaves + 1), 2):
        assert -1 - 1e-12 <= rho[[i, j]] <= 1 + 1e-12
