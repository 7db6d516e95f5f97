"""
JSON and CSV serialization.

All JSON is written with sorted, deterministic key order and every float
printed with 17 significant digits, so equal inputs give byte-identical
files. Coordinate vectors use the layout
``{"n": n, "kind": kind, "entries": {"<bitmask>": value}}`` with a few kind
specific extras (``means`` for central moments and tree cumulants, ``rho_bar``
for correlation coordinates, ``tree`` when the coordinates are tied to one).
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from fractions import Fraction
from typing import Any, Mapping, Optional, Union

import numpy as np

from .fiber import FiberReport, FiniteSmooth, ManifoldWithCorners, Singular
from .moments import (
    CentralMoments,
    CorrelationCoords,
    NoncentralMoments,
    ProbabilityTable,
    TreeCumulants,
    alpha_string,
    leaves_of,
)
from .params import ConstraintError, OmegaParams, RhoParams, ThetaParams, omega_to_theta
from .tree import TreeTopology, parse_newick, to_newick

__all__ = [
    "dumps",
    "coords_to_json",
    "coords_from_json",
    "params_to_json",
    "params_from_json",
    "report_to_json",
    "pattern_table_csv",
    "load_tree",
]

Coords = Union[ProbabilityTable, NoncentralMoments, CentralMoments, TreeCumulants, CorrelationCoords]
Params = Union[ThetaParams, OmegaParams, RhoParams]


# ---------------------------------------------------------------------- #
# deterministic JSON


def _number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite number {x}")
    if x == 0:
        return "0.0"
    return format(x, ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (bool, int, float, Fraction, np.floating, np.integer, np.bool_)):
        return _number(obj)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = [json.dumps(str(k)) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [_encode(v, indent, level + 1) for v in obj]
        if all(not isinstance(v, (Mapping, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(items) + "]"
        return "[" + pad + ("," + pad).join(items) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """
    Serialize plain data deterministically.

    Mapping keys keep their insertion order, so callers build mappings in a
    fixed order; floats use 17 significant digits; a trailing newline is added.
    """
    return _encode(obj, indent, 0) + "\n"


# ---------------------------------------------------------------------- #
# trees


def load_tree(text: str) -> TreeTopology:
    """Parse Newick text, or read it from a file when ``text`` names one."""
    text = text.strip()
    if not text.endswith(";") and not text.startswith("("):
        with open(text, encoding="utf-8") as fh:
            text = fh.read().strip()
    return parse_newick(text)


def _entries(values, n: int) -> dict[str, float]:
    return {str(mask): values[mask] for mask in range(1 << n)}


def _read_entries(data: Mapping, n: int) -> np.ndarray:
    entries = data.get("entries")
    if not isinstance(entries, Mapping):
        raise ValueError("coordinate file needs an 'entries' object")
    out = np.zeros(1 << n)
    seen = set()
    for key, value in entries.items():
        mask = int(key)
        if not 0 <= mask < 1 << n:
            raise ValueError(f"entry key {key} out of range for n = {n}")
        out[mask] = float(value)
        seen.add(mask)
    if len(seen) != 1 << n:
        raise ValueError(f"expected {1 << n} entries, got {len(seen)}")
    return out


# ---------------------------------------------------------------------- #
# coordinate vectors


def coords_to_json(c: Coords) -> dict:
    """Plain-data form of a coordinate vector."""
    if isinstance(c, ProbabilityTable):
        return {"n": c.n, "kind": "p", "entries": _entries(c.values, c.n)}
    if isinstance(c, NoncentralMoments):
        return {"n": c.n, "kind": "lambda", "entries": _entries(c.values, c.n)}
    if isinstance(c, CentralMoments):
        return {"n": c.n, "kind": "mu", "means": list(c.means), "entries": _entries(c.mu, c.n)}
    if isinstance(c, TreeCumulants):
        return {"n": c.n, "kind": "kappa", "tree": to_newick(c.tree), "means": list(c.means),
                "entries": _entries(c.kappa, c.n)}
    if isinstance(c, CorrelationCoords):
        return {"n": c.n, "kind": "rho", "rho_bar": list(c.rho_bar), "entries": _entries(c.rho, c.n)}
    raise TypeError(f"not a coordinate vector: {type(c).__name__}")


def coords_from_json(data: Mapping, tree: Optional[TreeTopology] = None) -> Coords:
    """
    Inverse of :func:`coords_to_json`.

    Tree cumulants need a tree: ``tree`` wins over the file's ``tree`` field.
    """
    try:
        n = int(data["n"])
        kind = data["kind"]
    except (KeyError, TypeError) as exc:
        raise ValueError("coordinate file needs 'n' and 'kind'") from exc
    values = _read_entries(data, n)
    if kind == "p":
        return ProbabilityTable(n, values)
    if kind == "lambda":
        return NoncentralMoments(n, values)
    means = np.array([float(x) for x in data.get("means", ())])
    if kind == "mu":
        return CentralMoments(n, means, values)
    if kind == "kappa":
        if tree is None:
            if "tree" not in data:
                raise ValueError("tree cumulants need a tree")
            tree = parse_newick(data["tree"])
        return TreeCumulants(tree, n, means, values)
    if kind == "rho":
        return CorrelationCoords(n, np.array([float(x) for x in data["rho_bar"]]), values)
    raise ValueError(f"unknown coordinate kind {kind!r}")


# ---------------------------------------------------------------------- #
# parameter files


def params_to_json(params: Params) -> dict:
    """Parameter file: tree, chart, per-edge values (parent first) and per-node values."""
    t = params.tree
    name = t.node_name
    if isinstance(params, ThetaParams):
        edges = [{"u": name(u), "v": name(v), "values": list(params.edge_cond[(u, v)])}
                 for u, v in t.directed_edges()]
        return {"tree": to_newick(t), "chart": "theta", "root_p1": params.root_p1, "edges": edges, "nodes": []}
    if isinstance(params, OmegaParams):
        chart, node_vals, edge_vals = "omega", params.mu_bar, params.eta
    elif isinstance(params, RhoParams):
        chart, node_vals, edge_vals = "rho", params.rho_bar, params.rho_edge
    else:
        raise TypeError(f"not a parameter point: {type(params).__name__}")
    edges = [{"u": name(u), "v": name(v), "values": [edge_vals[(u, v)]]} for u, v in t.directed_edges()]
    nodes = [{"v": name(v), "value": node_vals[v]} for v in sorted(t.nodes)]
    return {"tree": to_newick(t), "chart": chart, "edges": edges, "nodes": nodes}


def params_from_json(data: Mapping, tree: Optional[TreeTopology] = None,
                     chart: Optional[str] = None) -> Params:
    """
    Read a parameter file.

    Node references may be leaf labels, inner-node names or ``#id``. The
    ``chart`` argument must agree with the file's chart when both are given.
    """
    file_chart = data.get("chart")
    if chart and file_chart and chart != file_chart:
        raise ValueError(f"chart {chart!r} requested but the file holds {file_chart!r}")
    chart = chart or file_chart or "theta"
    if tree is None:
        if "tree" not in data:
            raise ValueError("parameter file has no tree; pass one explicitly")
        tree = parse_newick(data["tree"])

    def ref(x):
        return tree.resolve(x if isinstance(x, int) else str(x))

    edges = {}
    for item in data.get("edges", ()):
        edges[(ref(item["u"]), ref(item["v"]))] = [float(x) for x in item["values"]]
    nodes = {ref(item["v"]): float(item["value"]) for item in data.get("nodes", ())}

    if chart == "theta":
        if "root_p1" not in data:
            raise ValueError("theta parameter file needs 'root_p1'")
        return ThetaParams(tree, float(data["root_p1"]), edges)
    single = {}
    for e, vals in edges.items():
        if len(vals) != 1:
            raise ValueError(f"edge {e} needs exactly one value in the {chart} chart")
        single[e] = vals[0]
    if chart == "omega":
        return OmegaParams(tree, nodes, single)
    if chart == "rho":
        return RhoParams(tree, nodes, single)
    raise ValueError(f"unknown chart {chart!r}")


# ---------------------------------------------------------------------- #
# fiber reports


def _edge(t: TreeTopology, e) -> list[str]:
    u, v = t.orient(e)
    return [t.node_name(u), t.node_name(v)]


def _classification(t: TreeTopology, c) -> dict:
    if isinstance(c, FiniteSmooth):
        return {"tag": c.tag, "count": c.count}
    if isinstance(c, ManifoldWithCorners):
        return {"tag": c.tag, "dimension": c.dimension,
                "degree_two_nodes": [t.node_name(v) for v in c.degree_two_nodes]}
    if isinstance(c, Singular):
        d = c.deepest
        return {
            "tag": c.tag,
            "constraints": d.constraints(t),
            "minimal_pairs": [
                {"nodes": [t.node_name(v) for v in sorted(nodes)],
                 "edges": [_edge(t, e) for e in sorted(t.orient(e) for e in edges)]}
                for nodes, edges in d.minimal_pairs
            ],
        }
    raise TypeError(f"unknown classification {c!r}")


def report_to_json(report: FiberReport) -> dict:
    """
    Plain-data fiber report.

    Finite fibers list every point as an omega parameter file together with
    its theta image.
    """
    t = report.tree
    name = t.node_name
    out: dict[str, Any] = {
        "tree": to_newick(t),
        "classification": _classification(t, report.classification),
        "isolated_edges": [_edge(t, e) for e in sorted(t.orient(e) for e in report.isolated)],
        "classes_isolated": [[_edge(t, e) for e in cls] for cls in report.classes_isolated],
        "classes_active": [[_edge(t, e) for e in cls] for cls in report.classes_active],
        "degenerate_nodes": [name(v) for v in sorted(report.degenerate_nodes)],
        "forest_degrees": {name(v): report.forest.degree(v) for v in sorted(t.inner_nodes)},
    }
    rec = report.recovered
    if rec is not None:
        out["recovered"] = {
            "leaf_mu_bar": {name(v): x for v, x in sorted(rec.leaf_mu_bar.items())},
            "mu_bar_sq": {name(v): x for v, x in sorted(rec.mu_bar_sq.items())},
            "eta_sq": [{"u": name(u), "v": name(v), "value": x} for (u, v), x in sorted(rec.eta_sq.items())],
            "paths": [
                {"edges": [_edge(t, e) for e in p.edges], "ends": [name(v) for v in p.ends],
                 "mu_sq": p.mu_sq, "eta_sq": p.eta_sq, "rho_sq": p.rho_sq}
                for p in rec.paths
            ],
            "checks": list(rec.checks),
        }
    if report.points:
        out["points"] = [params_to_json(p) for p in report.points]
        thetas = []
        for p in report.points:
            try:
                thetas.append(params_to_json(omega_to_theta(p)))
            except ConstraintError:
                thetas.append(None)
        out["theta_points"] = thetas
    out["warnings"] = list(report.warnings)
    return out


# ---------------------------------------------------------------------- #
# CSV


def pattern_table_csv(p: ProbabilityTable, lam: NoncentralMoments, kappa: TreeCumulants, precision: int = 4) -> str:
    """Rows ``alpha, I, p, lambda, kappa`` in pattern order (leaf 1 first)."""
    n = p.n
    fmt = f"{{:.{precision}f}}"
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["alpha", "I", "p", "lambda", "kappa"])
    rows = sorted(range(1 << n), key=lambda m: alpha_string(m, n))
    for mask in rows:
        label = ("," if n >= 10 else "").join(str(i) for i in leaves_of(mask))
        k = float(kappa.kappa[mask]) if bin(mask).count("1") >= 2 else 0.0
        vals = [fmt.format(float(x)) for x in (p.values[mask], lam.values[mask], k)]
        vals = [v if v.strip("-0.") else fmt.format(0.0) for v in vals]
        writer.writerow([alpha_string(mask, n), label] + vals)
    return buf.getvalue()
