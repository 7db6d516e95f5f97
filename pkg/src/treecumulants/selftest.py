"""Golden-fixture and randomized self-checks runnable from the command line."""

from __future__ import annotations

import math
from typing import Callable, Iterator

import numpy as np

from . import fixtures as fx
from . import oracle
from .fiber import FiniteSmooth, Singular, analyze_fiber, enumerate_fiber, recover_tripod, covariance_summary
from .generators import random_table, random_theta, random_tree
from .moments import (
    kappa_to_mu,
    lambda_to_mu,
    lambda_to_p,
    mu_to_kappa,
    ProbabilityTable,
    mu_to_lambda,
    p_to_lambda,
    p_to_mu,
)
from .params import markov_joint, model_forward, omega_to_theta, psi_contracted, theta_to_omega
from .poset import build_poset, classical_mobius_top, enumerate_set_partitions
from .tree import TreeTopology, parse_newick

Check = tuple[str, Callable[[], bool]]


def _quartet_arrays():
    theta = fx.quartet_theta()
    p = model_forward(theta)
    lam = p_to_lambda(p)
    k = mu_to_kappa(theta.tree, lambda_to_mu(lam))
    return theta, p, lam, k


def _table1() -> Iterator[Check]:
    def table():
        _, p, lam, k = _quartet_arrays()
        worst = 0.0
        for alpha, pv, lv, kv in fx.QUARTET_TABLE:
            m = int(alpha[::-1], 2)
            worst = max(worst, abs(p.values[m] - pv), abs(lam.values[m] - lv))
            if bin(m).count("1") >= 2:
                worst = max(worst, abs(k.kappa[m] - kv))
        return worst <= 5e-5

    def omega():
        got = fx.quartet_tuple(theta_to_omega(fx.quartet_theta()))
        return np.allclose(got, fx.QUARTET_FIBER_REFERENCE[0], atol=1e-12)

    def fiber():
        theta, _, _, k = _quartet_arrays()
        rep = analyze_fiber(theta.tree, k)
        tuples = {tuple(round(x, 9) for x in fx.quartet_tuple(pt)) for pt in rep.points}
        want = set(fx.QUARTET_FIBER_REFERENCE[:3]) | {fx.QUARTET_FIBER_FOURTH}
        return isinstance(rep.classification, FiniteSmooth) and tuples == want

    yield "quartet table", table
    yield "quartet omega values", omega
    yield "quartet fiber points", fiber


def _poset(rng: np.random.Generator) -> Iterator[Check]:
    def identity(t: TreeTopology):
        def run():
            leaves = list(t.leaves)
            pos = build_poset(t, leaves)
            mu = pos.mobius_matrix()
            return bool(np.array_equal(mu @ pos.leq_matrix().astype(np.int64), np.eye(len(pos), dtype=np.int64)))
        return run

    for k in range(3):
        t = random_tree(int(rng.integers(3, 7)), rng)
        yield f"mobius identity on random tree {k}", identity(t)

    def classical():
        for size in range(1, 6):
            for part in enumerate_set_partitions(range(1, size + 1)):
                b = len(part)
                if classical_mobius_top(part) != (-1) ** (b - 1) * math.factorial(b - 1):
                    return False
        return True

    yield "classical top values", classical


def _moments(rng: np.random.Generator) -> Iterator[Check]:
    for k in range(5):
        n = int(rng.integers(2, 6))
        p = random_table(n, rng)

        def roundtrip(p=p):
            lam = p_to_lambda(p)
            mu = lambda_to_mu(lam)
            return (np.allclose(lambda_to_p(lam).values, p.values, atol=1e-12)
                    and np.allclose(mu_to_lambda(mu).values, lam.values, atol=1e-12))

        def kappa(p=p, n=n):
            t = random_tree(n, rng)
            mu = p_to_mu(p)
            return np.allclose(kappa_to_mu(mu_to_kappa(t, mu)).mu, mu.mu, atol=1e-12)

        def definition(p=p):
            lam, mu = oracle.moments_by_definition(np.asarray(p.values))
            return np.allclose(lam, p_to_lambda(p).values, atol=1e-13) and np.allclose(mu, p_to_mu(p).mu, atol=1e-13)

        yield f"p/lambda/mu round trip {k}", roundtrip
        yield f"mu/kappa round trip {k}", kappa
        yield f"moments by definition {k}", definition


def _params(rng: np.random.Generator) -> Iterator[Check]:
    for k in range(5):
        t = random_tree(int(rng.integers(2, 7)), rng)
        theta = random_theta(t, rng)

        def equivalence(theta=theta, t=t):
            k = psi_contracted(t, theta_to_omega(theta))
            route = mu_to_kappa(k.tree, p_to_mu(model_forward(theta)))
            return np.max(np.abs(k.kappa - route.kappa)) <= 1e-10

        def chart(theta=theta, t=t):
            back = omega_to_theta(theta_to_omega(theta))
            return all(np.allclose(back.edge_cond[e], theta.edge_cond[e], atol=1e-12) for e in t.directed_edges())

        yield f"psi equals moment route {k}", equivalence
        yield f"theta/omega round trip {k}", chart


def _fiber(rng: np.random.Generator) -> Iterator[Check]:
    def tripod_singular():
        t = parse_newick(fx.TRIPOD_NEWICK)
        margins = [np.array([1 - q, q]) for q in rng.uniform(0.1, 0.9, size=3)]
        p = ProbabilityTable(3, np.kron(np.kron(margins[2], margins[1]), margins[0]))
        rep = analyze_fiber(t, p_to_mu(p))
        return isinstance(rep.classification, Singular) and len(rep.classification.deepest.minimal_pairs) == 4

    def seven_leaf():
        om = fx.seven_leaf_point()
        rep = analyze_fiber(om.tree, psi_contracted(om.tree, om))
        t = om.tree
        want = {t.orient((t.resolve(u), t.resolve(v))) for u, v in fx.SEVEN_LEAF_ISOLATED}
        return {t.orient(e) for e in rep.isolated} == want and isinstance(rep.classification, Singular)

    def choice_free():
        _, _, _, k = _quartet_arrays()
        c = covariance_summary(k)
        return abs(recover_tripod(c, 1, 2, 3)[0] - recover_tripod(c, 1, 2, 4)[0]) <= 1e-10

    def orbit():
        t = random_tree(int(rng.integers(3, 7)), rng, trivalent=True)
        om = theta_to_omega(random_theta(t, rng, 0.1, 0.9))
        base = psi_contracted(t, om).kappa
        pts = enumerate_fiber(om)
        return len(pts) == 2 ** len(t.inner_nodes) and all(
            np.max(np.abs(psi_contracted(t, q).kappa - base)) <= 1e-10 for q in pts)

    yield "tripod product is singular", tripod_singular
    yield "seven-leaf isolated edges", seven_leaf
    yield "tripod choice independence", choice_free
    yield "sign-switch orbit", orbit


def _oracle(rng: np.random.Generator) -> Iterator[Check]:
    for k in range(3):
        t = random_tree(int(rng.integers(2, 6)), rng)
        theta = random_theta(t, rng)

        def joint(theta=theta):
            return np.allclose(oracle.joint_by_enumeration(theta).values, markov_joint(theta).values, atol=1e-14)

        def markov(theta=theta, t=t):
            return oracle.global_markov_check(t, markov_joint(theta))

        def leaves(theta=theta):
            return np.allclose(oracle.leaf_table_by_enumeration(theta), model_forward(theta).values, atol=1e-13)

        yield f"joint by enumeration {k}", joint
        yield f"global Markov property {k}", markov
        yield f"leaf marginal by enumeration {k}", leaves


SUITES = {
    "table1": lambda rng: _table1(),
    "poset": _poset,
    "moments": _moments,
    "params": _params,
    "fiber": _fiber,
    "oracle": _oracle,
}


def run(suites: list[str] | None = None, seed: int = 0, out=print) -> bool:
    """
    Run the named suites (all by default) and print one summary line each.

    Returns True when every check passed.
    """
    names = suites or list(SUITES)
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise ValueError(f"unknown suites {unknown}; choose from {sorted(SUITES)}")
    ok = True
    for name in names:
        rng = np.random.default_rng([seed, list(SUITES).index(name)])
        passed = total = 0
        failed = []
        for label, check in SUITES[name](rng):
            total += 1
            try:
                good = bool(check())
            except Exception as exc:  # a crash is a failure of that check
                good = False
                label = f"{label} ({type(exc).__name__}: {exc})"
            if good:
                passed += 1
            else:
                failed.append(label)
        out(f"{name}: {passed}/{total} passed")
        for label in failed:
            out(f"  FAILED {label}")
        ok = ok and not failed
    return ok
