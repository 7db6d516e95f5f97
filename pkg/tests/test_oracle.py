from __future__ import annotations

from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from treecumulants import fixtures as fx
from treecumulants import oracle
from treecumulants.generators import random_theta
from treecumulants.params import FullJoint, ThetaParams, markov_joint, model_forward
from treecumulants.tree import parse_newick

from conftest import seeds, tree_and_theta


def _tripod():
    return parse_newick(fx.TRIPOD_NEWICK)


def _random_joint(k: int, seed: int) -> FullJoint:
    rng = np.random.default_rng(seed)
    return FullJoint(tuple(range(1, k + 1)), rng.dirichlet(np.ones(1 << k)))


def _product_joint(seed: int) -> FullJoint:
    # nodes 1, 2 independent of node 3
    rng = np.random.default_rng(seed)
    left, right = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(2))
    return FullJoint((1, 2, 3), np.kron(right, left))


def test_copy_tripod_enumeration():
    t = _tripod()
    joint = oracle.joint_by_enumeration(ThetaParams(t, 0.5, {e: (0.0, 1.0) for e in t.directed_edges()}))
    assert joint.values[0] == 0.5 and joint.values[15] == 0.5
    assert np.count_nonzero(joint.values) == 2


def test_deterministic_tree_two_atoms():
    t = parse_newick(fx.SEVEN_LEAF_NEWICK)
    theta = ThetaParams(t, 0.25, {e: (0.0, 1.0) for e in t.directed_edges()})
    assert np.count_nonzero(oracle.joint_by_enumeration(theta).values) == 2
    assert np.count_nonzero(oracle.leaf_table_by_enumeration(theta)) == 2


def test_enumeration_cap():
    t = parse_newick("(" + ",".join(str(i) for i in range(1, 21)) + ")h;")
    with pytest.raises(ValueError):
        oracle.joint_by_enumeration(ThetaParams(t, 0.5, {e: (0.1, 0.9) for e in t.directed_edges()}))


def test_quartet_leaf_table():
    theta = fx.quartet_theta()
    assert np.allclose(oracle.leaf_table_by_enumeration(theta), model_forward(theta).values, atol=1e-13)


def test_product_is_independent():
    joint = _product_joint(3)
    assert oracle.check_independence(joint, [1, 2], [3])
    assert oracle.independence_by_definition(joint, [1, 2], [3])


def test_copied_pair_is_dependent():
    joint = FullJoint((1, 2), [0.5, 0.0, 0.0, 0.5])
    assert not oracle.check_independence(joint, [1], [2])
    assert not oracle.independence_by_definition(joint, [1], [2])


def test_overlap_rejected():
    joint = _random_joint(3, 0)
    with pytest.raises(ValueError):
        oracle.check_independence(joint, [1, 2], [2])
    with pytest.raises(ValueError):
        oracle.check_conditional_independence(joint, [1], [2], 1)


def test_tripod_conditional_independence():
    t = _tripod()
    h = t.resolve("h")
    joint = markov_joint(random_theta(t, np.random.default_rng(1), 0.1, 0.9))
    assert oracle.check_conditional_independence(joint, [1], [2], h)
    assert oracle.check_conditional_independence(joint, [1, 2], [3], h)
    assert not oracle.check_independence(joint, [1], [2])


def test_degenerate_conditioning_rejected():
    t = _tripod()
    h = t.resolve("h")
    joint = markov_joint(ThetaParams(t, 1.0, {e: (0.2, 0.7) for e in t.directed_edges()}))
    with pytest.raises(ValueError):
        oracle.check_conditional_independence(joint, [1], [2], h)


def test_global_markov_on_model():
    theta = fx.quartet_theta()
    assert oracle.global_markov_check(theta.tree, markov_joint(theta))


def test_global_markov_detects_perturbation():
    t = _tripod()
    joint = markov_joint(random_theta(t, np.random.default_rng(7), 0.1, 0.9))
    values = np.array(joint.values)
    values[5] += 0.01
    perturbed = FullJoint(joint.nodes, values / values.sum())
    assert not oracle.global_markov_check(t, perturbed)


def test_global_markov_node_mismatch():
    with pytest.raises(ValueError):
        oracle.global_markov_check(_tripod(), _random_joint(3, 0))


def test_empty_conditioning_is_marginal_independence():
    for seed in range(5):
        joint = _product_joint(seed) if seed % 2 else _random_joint(3, seed)
        assert (oracle.conditional_independence_by_conditioning(joint, [1, 2], [3], [])
                == oracle.independence_by_definition(joint, [1, 2], [3]))


def test_coarse_grid_routes_agree():
    t = _tripod()
    h = t.resolve("h")
    grid = (0.1, 0.5, 0.9)
    edges = t.directed_edges()
    count = 0
    for root in grid:
        for a, b in product(grid, repeat=2):
            cond = {e: (a, b) if k % 2 == 0 else (b, a) for k, e in enumerate(edges)}
            joint = markov_joint(ThetaParams(t, root, cond))
            for left, right in (([1], [2]), ([1, 2], [3]), ([1], [2, 3])):
                moment = oracle.check_conditional_independence(joint, left, right, h)
                direct = oracle.conditional_independence_by_conditioning(joint, left, right, [h])
                assert moment == direct
                count += 1
    assert count == 81


# ---------------------------------------------------------------- properties


@given(tree_and_theta(max_leaves=7))
def test_enumeration_matches_primary(tt):
    _, theta = tt
    assert np.allclose(oracle.joint_by_enumeration(theta).values, markov_joint(theta).values, atol=1e-14)
    assert np.allclose(oracle.leaf_table_by_enumeration(theta), model_forward(theta).values, atol=1e-13)


@given(st.integers(2, 4), seeds, st.data())
def test_independence_routes_agree(k, seed, data):
    joint = _random_joint(k, seed) if data.draw(st.booleans()) else None
    if joint is None:
        rng = np.random.default_rng(seed)
        tables = [rng.dirichlet(np.ones(2)) for _ in range(k)]
        values = tables[0]
        for tbl in tables[1:]:
            values = np.kron(tbl, values)
        joint = FullJoint(tuple(range(1, k + 1)), values)
    split = data.draw(st.integers(1, k - 1))
    a, b = list(range(1, split + 1)), list(range(split + 1, k + 1))
    assert oracle.check_independence(joint, a, b) == oracle.independence_by_definition(joint, a, b)


@given(seeds, st.data())
def test_conditional_routes_agree(seed, data):
    joint = _random_joint(4, seed)
    h = data.draw(st.sampled_from([1, 2, 3, 4]))
    rest = [v for v in (1, 2, 3, 4) if v != h]
    cut = data.draw(st.integers(1, 2))
    a, b = rest[:cut], rest[cut:]
    assert (oracle.check_conditional_independence(joint, a, b, h)
            == oracle.conditional_independence_by_conditioning(joint, a, b, [h]))


@given(tree_and_theta(max_leaves=5))
def test_markov_joint_satisfies_global_markov(tt):
    t, theta = tt
    assert oracle.global_markov_check(t, markov_joint(theta))


@given(tree_and_theta(max_leaves=4))
def test_model_points_pass_conditional_checks(tt):
    t, theta = tt
    joint = markov_joint(theta)
    for h in t.inner_nodes:
        branches = [sorted(b) for b in _branches(t, h)]
        for x in range(len(branches)):
            for y in range(x + 1, len(branches)):
                assert oracle.check_conditional_independence(joint, branches[x], branches[y], h)
                assert oracle.conditional_independence_by_conditioning(joint, branches[x], branches[y], [h])


def _branches(t, h):
    out = []
    for start in sorted(t.neighbors(h)):
        seen, stack = {h, start}, [start]
        comp = []
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in t.neighbors(x):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        out.append(comp)
    return out
