"""Acceptance criteria; each test prints one PASS/FAIL line."""

from __future__ import annotations

import itertools
import math
import time

import numpy as np
import pytest

from treecumulants import fixtures as fx
from treecumulants import oracle
from treecumulants.fiber import (
    FiniteSmooth,
    ManifoldWithCorners,
    Singular,
    analyze_fiber,
    classify_fiber,
    covariance_summary,
    local_sign_switch,
    path_invariant_choices,
    recover_parameters,
    recover_tripod,
)
from treecumulants.generators import product_table, random_table, random_theta, random_tree
from treecumulants.moments import (
    ProbabilityTable,
    classical_cumulant,
    kappa_to_mu,
    lambda_to_mu,
    lambda_to_p,
    mu_to_kappa,
    mu_to_lambda,
    p_to_lambda,
    p_to_mu,
)
from treecumulants.params import (
    model_forward,
    omega_to_rho,
    omega_to_theta,
    psi,
    psi_contracted,
    rho_to_omega,
    theta_to_omega,
)
from treecumulants.poset import PosetSizeError, build_poset, classical_mobius_top, enumerate_set_partitions
from treecumulants.tree import parse_newick, path_edges


@pytest.fixture
def verdict(capsys):
    def report(number: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail
    return report


def _quartet_coordinates():
    theta = fx.quartet_theta()
    p = model_forward(theta)
    lam = p_to_lambda(p)
    mu = lambda_to_mu(lam)
    return theta, p, lam, mu, mu_to_kappa(theta.tree, mu)


def test_criterion_01_table_reproduction(verdict):
    start = time.perf_counter()
    _, p, lam, _, kappa = _quartet_coordinates()
    elapsed = time.perf_counter() - start
    worst = 0.0
    for alpha, pv, lv, kv in fx.QUARTET_TABLE:
        mask = int(alpha[::-1], 2)
        k = float(kappa.kappa[mask]) if bin(mask).count("1") >= 2 else 0.0
        worst = max(worst, abs(p.values[mask] - pv), abs(lam.values[mask] - lv), abs(k - kv))
    verdict(1, worst <= 5e-5 and elapsed < 1.0,
            f"48 table entries, max deviation {worst:.2e} (tol 5e-5), {elapsed * 1e3:.1f} ms")


def test_criterion_02_derived_quantities(verdict):
    theta, *_, kappa = _quartet_coordinates()
    c = covariance_summary(kappa)
    r, a = theta.tree.resolve("r"), theta.tree.resolve("a")
    mu_r_123, eta_r1, _, _ = recover_tripod(c, 1, 2, 3)
    mu_r_124 = recover_tripod(c, 1, 2, 4)[0]
    squares = recover_parameters(theta.tree, c)
    eta_ra = squares.eta_sq[(r, a)]
    errors = [abs(mu_r_123 - 0.36), abs(eta_r1 - 0.25), abs(eta_ra - 0.25), abs(mu_r_124 - 0.36)]
    verdict(2, max(errors) <= 1e-10,
            f"mu_bar_r^2={mu_r_123:.12f} (124: {mu_r_124:.12f}), eta_r1^2={eta_r1:.12f}, "
            f"eta_ra^2={eta_ra:.12f}; max error {max(errors):.1e}")


def test_criterion_03_fiber_enumeration(verdict):
    theta, *_, kappa = _quartet_coordinates()
    report = analyze_fiber(theta.tree, kappa)
    points = report.points
    gaps = [float(np.max(np.abs(psi(theta.tree, q).kappa - kappa.kappa))) for q in points]
    tuples = [fx.quartet_tuple(q) for q in points]

    def matches(a, b):
        return max(abs(x - y) for x, y in zip(a, b)) <= 1e-12

    listed_hits = sum(any(matches(t, pr) for t in tuples) for pr in fx.QUARTET_FIBER_REFERENCE[:3])
    first = next(q for q in points if matches(fx.quartet_tuple(q), fx.QUARTET_FIBER_REFERENCE[0]))
    r, a = theta.tree.resolve("r"), theta.tree.resolve("a")
    fourth = fx.quartet_tuple(local_sign_switch(local_sign_switch(first, r), a))
    fourth_ok = matches(fourth, fx.QUARTET_FIBER_FOURTH) and any(matches(t, fourth) for t in tuples)
    bad_tuple_absent = not any(matches(t, fx.QUARTET_FIBER_REFERENCE[3]) for t in tuples)

    tripod = parse_newick(fx.TRIPOD_NEWICK)
    rng = np.random.default_rng(7)
    tripod_om = theta_to_omega(random_theta(tripod, rng, 0.1, 0.9))
    tripod_points = analyze_fiber(tripod, psi(tripod, tripod_om)).points

    ok = (isinstance(report.classification, FiniteSmooth) and len(points) == 4 == 2 ** (6 - 4)
          and max(gaps) <= 1e-10 and listed_hits == 3 and fourth_ok and bad_tuple_absent
          and len(tripod_points) == 2)
    verdict(3, ok, f"{len(points)} quartet points, psi gap {max(gaps):.1e}, {listed_hits}/3 reference tuples, "
                   f"fourth = delta_a delta_r(first): {fourth_ok}, tripod points {len(tripod_points)}")


def test_criterion_04_parametrization_equivalence(verdict):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst, non_trivalent = 0.0, 0
    for k in range(200):
        n = int(rng.integers(2, 8))
        t = random_tree(n, rng, trivalent=bool(k % 2))
        non_trivalent += any(t.degree(v) > 3 for v in t.inner_nodes)
        theta = random_theta(t, rng)
        kappa = psi_contracted(t, theta_to_omega(theta))
        route = mu_to_kappa(kappa.tree, p_to_mu(model_forward(theta)))
        worst = max(worst, float(np.max(np.abs(kappa.kappa - route.kappa))))
    elapsed = time.perf_counter() - start
    verdict(4, worst <= 1e-10 and elapsed < 60 and non_trivalent > 0,
            f"200 trees ({non_trivalent} non-trivalent), max |difference| {worst:.1e}, {elapsed:.1f} s")


def test_criterion_05_round_trips(verdict):
    rng = np.random.default_rng(5)
    worst = dict.fromkeys(["p-lambda", "lambda-mu", "mu-kappa", "theta-omega", "omega-rho"], 0.0)
    trees = {n: [random_tree(n, rng) for _ in range(5)] for n in range(2, 7)}
    for k in range(1000):
        n = int(rng.integers(2, 7))
        p = random_table(n, rng)
        lam = p_to_lambda(p)
        worst["p-lambda"] = max(worst["p-lambda"], float(np.max(np.abs(lambda_to_p(lam).values - p.values))))
        mu = lambda_to_mu(lam)
        worst["lambda-mu"] = max(worst["lambda-mu"], float(np.max(np.abs(mu_to_lambda(mu).values - lam.values))))
        t = trees[n][k % 5]
        back = kappa_to_mu(mu_to_kappa(t, mu))
        worst["mu-kappa"] = max(worst["mu-kappa"], float(np.max(np.abs(back.mu - mu.mu))))
        theta = random_theta(t, rng)
        again = omega_to_theta(theta_to_omega(theta))
        diff = max(abs(x - y) for e in t.directed_edges() for x, y in zip(again.edge_cond[e], theta.edge_cond[e]))
        worst["theta-omega"] = max(worst["theta-omega"], diff, abs(again.root_p1 - theta.root_p1))
        om = theta_to_omega(theta)
        om2 = rho_to_omega(omega_to_rho(om))
        worst["omega-rho"] = max(worst["omega-rho"], max(abs(x - y) for x, y in zip(om.vector(), om2.vector())))
    ok = max(worst.values()) <= 1e-12
    verdict(5, ok, "1000 inputs each; " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_06_split_zero(verdict):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 8))
        t = random_tree(n, rng)
        edges = sorted(t.edges)
        u, v = edges[rng.integers(len(edges))]
        side = [i for i in t.leaves if u not in t.path_nodes(v, i)]
        p = product_table(n, side, rng)
        kappa = mu_to_kappa(t, p_to_mu(p))
        worst = max(worst, abs(float(kappa.kappa[(1 << n) - 1])))
    verdict(6, worst <= 1e-12, f"100 product distributions across edge splits, max |kappa_[n]| {worst:.1e}")


def test_criterion_07_isolated_edge_figure(verdict):
    om = fx.seven_leaf_point()
    t = om.tree
    kappa = psi(t, om)
    c = covariance_summary(kappa)
    nonzero = {(i, j) for i, j in itertools.combinations(range(1, 8), 2) if c.pair(i, j) != 0}
    report = classify_fiber(t, c)

    def named(e):
        u, v = t.orient(e)
        return (t.node_name(u), t.node_name(v))

    def canon(pair):
        a, b = (t.resolve(x) for x in pair)
        return named((a, b))

    iso = {named(e) for e in report.isolated}
    want_iso = {canon(e) for e in fx.SEVEN_LEAF_ISOLATED}
    active = {frozenset(named(e) for e in cls) for cls in report.classes_active}
    want_active = {frozenset(canon(e) for e in cls) for cls in fx.SEVEN_LEAF_ACTIVE_CLASSES}
    degenerate = {t.node_name(v) for v in report.degenerate_nodes}
    ok = (nonzero == set(fx.SEVEN_LEAF_NONZERO_PAIRS) and iso == want_iso and active == want_active
          and len(report.classes_isolated) == 1 and degenerate == {"c", "e"}
          and isinstance(report.classification, Singular))
    verdict(7, ok, f"isolated {sorted(iso)}, {len(active)} active classes, V-hat {sorted(degenerate)}, "
                   f"{report.classification.tag}")


def test_criterion_08_singular_tripod(verdict):
    t = parse_newick(fx.TRIPOD_NEWICK)
    h = t.resolve("h")
    margins = [np.array([0.7, 0.3]), np.array([0.45, 0.55]), np.array([0.2, 0.8])]
    p = ProbabilityTable(3, np.kron(np.kron(margins[2], margins[1]), margins[0]))
    report = classify_fiber(t, covariance_summary(p_to_mu(p)))
    deepest = report.classification.deepest if isinstance(report.classification, Singular) else None
    want_pairs = {
        (frozenset({h}), frozenset()),
        (frozenset(), frozenset({(h, 1), (h, 2)})),
        (frozenset(), frozenset({(h, 1), (h, 3)})),
        (frozenset(), frozenset({(h, 2), (h, 3)})),
    }
    want_constraints = {"1 - mu_bar[h]^2 = 0", "eta[h,1] = 0", "eta[h,2] = 0", "eta[h,3] = 0"}
    ok = (deepest is not None and len(deepest.minimal_pairs) == 4
          and {(a, frozenset(t.orient(e) for e in b)) for a, b in deepest.minimal_pairs} == want_pairs
          and set(deepest.constraints(t)) == want_constraints)
    verdict(8, ok, f"{report.classification.tag}, "
                   f"{len(deepest.minimal_pairs) if deepest else 0} minimal pairs, "
                   f"constraints {sorted(deepest.constraints(t)) if deepest else []}")


def _poset_corpus():
    rng = np.random.default_rng(9)
    trees = [parse_newick(s) for s in (fx.QUARTET_NEWICK, "(1,2,3,4,5);", "((1,2),(3,4),(5,6));",
                                       "(((1,2),3),4,5);", fx.SEVEN_LEAF_NEWICK)]
    trees += [random_tree(int(rng.integers(3, 7)), rng) for _ in range(6)]
    for t in trees:
        for r in range(2, t.n_leaves + 1):
            for leaf_set in itertools.combinations(t.leaves, r):
                try:
                    pos = build_poset(t, leaf_set)
                except PosetSizeError:  # pragma: no cover - corpus is small
                    continue
                if len(pos) <= 200:
                    yield pos


def test_criterion_09_mobius(verdict):
    checked = 0
    defining_ok = rota_ok = True
    for pos in _poset_corpus():
        checked += 1
        zeta = pos.leq_matrix().astype(np.int64)
        mob = pos.mobius_matrix()
        # sum_{p <= r <= q} m(p, r) = delta(p, q)
        defining_ok &= bool(np.array_equal(mob @ zeta, np.eye(len(pos), dtype=np.int64)))
        to_top = pos.mobius_to_top()
        meet = np.array([[pos.meet_index(i, j) for j in range(len(pos))] for i in range(len(pos))])
        for j in range(len(pos) - 1):  # every pi_0 other than the top
            sums = np.bincount(meet[:, j], weights=to_top, minlength=len(pos))
            rota_ok &= bool(np.all(sums == 0))

    top_ok = True
    for size in range(1, 7):
        parts = enumerate_set_partitions(range(1, size + 1))
        # independent route: invert the zeta matrix of the refinement order
        leq = np.array([[all(any(b <= c for c in q.blocks) for b in p.blocks) for q in parts] for p in parts])
        mob = oracle.mobius_by_zeta_inverse(leq)
        top = next(k for k, q in enumerate(parts) if len(q) == 1)
        for k, part in enumerate(parts):
            b = len(part)
            expected = (-1) ** (b - 1) * math.factorial(b - 1)
            top_ok &= classical_mobius_top(part) == expected == round(mob[k, top])

    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(50):
        m = p_to_mu(random_table(4, rng))
        expanded = (m[(1, 2, 3, 4)] - m[(1, 2)] * m[(3, 4)] - m[(1, 3)] * m[(2, 4)] - m[(1, 4)] * m[(2, 3)])
        worst = max(worst, abs(classical_cumulant(m, (1, 2, 3, 4)) - expanded))
    ok = defining_ok and rota_ok and top_ok and worst <= 1e-12 and checked > 0
    verdict(9, ok, f"{checked} posets: defining identity {defining_ok}, meet-sum identity {rota_ok}; "
                   f"classical tops |I|<=6 {top_ok}; 4-cumulant max error {worst:.1e}")


def _path_covariance(om, u: int, v: int) -> float:
    """Cov(Y_u, Y_v) from the regression structure: Var(top) times eta along the path."""
    t = om.tree
    nodes = t.path_nodes(u, v)
    depth = {w: len(t.path_nodes(t.root, w)) for w in nodes}
    top = min(nodes, key=depth.__getitem__)
    value = (1 - om.mu_bar[top] ** 2) / 4
    for e in path_edges(t, u, v):
        value *= om.eta_of(*e)
    return value


def test_criterion_10_manifold_case(verdict):
    details, ok = [], True
    for om in (fx.quartet_manifold_point(), fx.six_leaf_manifold_point()):
        t = om.tree
        kappa = psi(t, om)
        c = covariance_summary(kappa)
        report = classify_fiber(t, c)
        cls = report.classification
        l2 = sum(1 for v in t.inner_nodes if report.forest.degree(v) == 2)
        ok &= isinstance(cls, ManifoldWithCorners) and l2 == 2 and cls.dimension == 2 * l2
        squares = recover_parameters(t, c, report)
        spread = 0.0
        for path in squares.paths:
            truth_mu_sq = _path_covariance(om, *path.ends) ** 2
            var_u = (1 - om.mu_bar[path.ends[0]] ** 2) / 4
            estimates = [val for _, val in path_invariant_choices(t, c, path.edges, report)]
            spread = max(spread, max(abs(x - truth_mu_sq) for x in estimates),
                         abs(path.mu_sq - truth_mu_sq), abs(path.eta_sq - truth_mu_sq / var_u ** 2))
        ok &= spread <= 1e-8
        details.append(f"{t.n_leaves} leaves: dim {getattr(cls, 'dimension', None)} (l2={l2}), "
                       f"{len(squares.paths)} path invariants, max deviation {spread:.1e}")
    verdict(10, ok, "; ".join(details))
