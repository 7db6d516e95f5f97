"""
Command-line interface.

Exit codes: 0 success, 2 input error, 3 data off the model, 4 internal
invariant failure (including a failing self-test).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import selftest
from .fiber import (
    DegenerateMarginError,
    OffModelError,
    analyze_fiber,
    classify_fiber,
    covariance_summary,
    local_sign_switch,
)
from .io import coords_from_json, coords_to_json, dumps, load_tree, params_from_json, params_to_json, report_to_json, pattern_table_csv
from .moments import (
    CentralMoments,
    NoncentralMoments,
    ProbabilityTable,
    TreeCumulants,
    kappa_to_rho,
    lambda_to_mu,
    mu_to_kappa,
    p_to_lambda,
    validate,
)
from .params import (
    ConstraintError,
    OmegaParams,
    RhoParams,
    ThetaParams,
    model_forward,
    omega_to_rho,
    omega_to_theta,
    rho_to_omega,
    theta_to_omega,
)
from .tree import TreeError, TreeTopology, to_newick

EXIT_OK, EXIT_INPUT, EXIT_OFF_MODEL, EXIT_INVARIANT = 0, 2, 3, 4


class InputError(ValueError):
    """Bad command-line input."""


@dataclass
class RunConfig:
    command: str
    inputs: list[str] = field(default_factory=list)
    tree: Optional[str] = None
    params: Optional[str] = None
    chart: Optional[str] = None
    eps: float = 1e-9
    out: Optional[str] = None
    csv: Optional[str] = None
    precision: int = 4
    seed: int = 0
    suites: list[str] = field(default_factory=list)
    nodes: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.eps > 0:
            raise InputError("--eps must be positive")
        if self.precision < 0:
            raise InputError("--precision must be non-negative")


def _read_json(path: str):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _emit(text: str, path: Optional[str]):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _tree(cfg: RunConfig) -> Optional[TreeTopology]:
    return load_tree(cfg.tree) if cfg.tree else None


def _load_params(cfg: RunConfig, path: Optional[str]):
    if not path:
        raise InputError("a parameter file is required (--params)")
    return params_from_json(_read_json(path), _tree(cfg), cfg.chart)


def _as_omega(params) -> OmegaParams:
    if isinstance(params, ThetaParams):
        return theta_to_omega(params)
    if isinstance(params, RhoParams):
        return rho_to_omega(params)
    return params


def _as_theta(params) -> ThetaParams:
    return params if isinstance(params, ThetaParams) else omega_to_theta(_as_omega(params))


def cmd_forward(cfg: RunConfig) -> int:
    theta = _as_theta(_load_params(cfg, cfg.params or (cfg.inputs[0] if cfg.inputs else None)))
    t = theta.tree
    p = model_forward(theta)
    lam = p_to_lambda(p)
    mu = lambda_to_mu(lam)
    kappa = mu_to_kappa(t, mu)
    try:
        rho = coords_to_json(kappa_to_rho(kappa))
    except ValueError:
        rho = None
    out = {"tree": to_newick(t), "p": coords_to_json(p), "lambda": coords_to_json(lam), "mu": coords_to_json(mu),
           "kappa": coords_to_json(kappa), "rho": rho}
    _emit(dumps(out), cfg.out)
    if cfg.csv:
        _emit(pattern_table_csv(p, lam, kappa, cfg.precision), cfg.csv)
    return EXIT_OK


def _load_data(cfg: RunConfig):
    if not cfg.inputs:
        raise InputError("an input coordinate file is required")
    data = _read_json(cfg.inputs[0])
    tree = _tree(cfg)
    if "kind" not in data and "p" in data:
        # output of the forward command
        if tree is None and "tree" in data:
            tree = load_tree(data["tree"])
        data = data["p"]
    if tree is None and "tree" in data:
        tree = load_tree(data["tree"])
    if tree is None:
        raise InputError("a tree is required (--tree)")
    coords = coords_from_json(data, tree)
    if coords.n != tree.require_model_tree():
        raise InputError("tree and data disagree on the number of leaves")
    if isinstance(coords, ProbabilityTable):
        if not validate(coords):
            raise InputError("probability table is not a distribution")
        coords = lambda_to_mu(p_to_lambda(coords))
    elif isinstance(coords, NoncentralMoments):
        if not validate(coords):
            raise InputError("moments do not come from a distribution")
        coords = lambda_to_mu(coords)
    elif not isinstance(coords, (CentralMoments, TreeCumulants)):
        raise InputError(f"cannot analyze {type(coords).__name__}")
    return tree, coords


def _summary(report, precision: int) -> str:
    cls = report.classification
    line = f"classification: {cls.tag}"
    if hasattr(cls, "count"):
        line += f" ({cls.count} points)"
    if hasattr(cls, "dimension"):
        line += f" (dimension {cls.dimension})"
    lines = [line]
    if report.recovered is not None:
        t = report.tree
        for v, x in sorted(report.recovered.mu_bar_sq.items()):
            lines.append(f"mu_bar[{t.node_name(v)}]^2 = {x:.{precision}f}")
        for (u, v), x in sorted(report.recovered.eta_sq.items()):
            lines.append(f"eta[{t.node_name(u)},{t.node_name(v)}]^2 = {x:.{precision}f}")
    return "\n".join(lines) + "\n"


def cmd_recover(cfg: RunConfig) -> int:
    tree, data = _load_data(cfg)
    report = analyze_fiber(tree, data, cfg.eps)
    _emit(dumps(report_to_json(report)), cfg.out)
    sys.stderr.write(_summary(report, cfg.precision))
    return EXIT_OK


def cmd_fiber(cfg: RunConfig) -> int:
    tree, data = _load_data(cfg)
    report = classify_fiber(tree, covariance_summary(data, cfg.eps))
    _emit(dumps(report_to_json(report)), cfg.out)
    sys.stderr.write(_summary(report, cfg.precision))
    return EXIT_OK


def cmd_switch(cfg: RunConfig) -> int:
    params = _load_params(cfg, cfg.params)
    omega = _as_omega(params)
    for ref in cfg.nodes:
        omega = local_sign_switch(omega, omega.tree.resolve(int(ref) if ref.isdigit() else ref))
    if isinstance(params, ThetaParams):
        out = omega_to_theta(omega)
    elif isinstance(params, RhoParams):
        out = omega_to_rho(omega)
    else:
        out = omega
    _emit(dumps(params_to_json(out)), cfg.out)
    return EXIT_OK


def cmd_selftest(cfg: RunConfig) -> int:
    ok = selftest.run(cfg.suites or None, cfg.seed)
    return EXIT_OK if ok else EXIT_INVARIANT


COMMANDS = {
    "forward": cmd_forward,
    "recover": cmd_recover,
    "fiber": cmd_fiber,
    "switch": cmd_switch,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tree", help="Newick string or file")
    common.add_argument("--params", help="parameter file (JSON)")
    common.add_argument("--chart", choices=["theta", "omega", "rho"], help="chart of the parameter file")
    common.add_argument("--eps", type=float, default=1e-9, help="zero threshold for covariances")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--precision", type=int, default=4, help="decimals in CSV and summaries")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized self-tests")

    parser = argparse.ArgumentParser(prog="treecumulants", description="Binary latent tree models in tree-cumulant coordinates.")
    sub = parser.add_subparsers(dest="command", required=True)
    fwd = sub.add_parser("forward", parents=[common], help="distribution and coordinates from parameters")
    fwd.add_argument("input", nargs="?", help="parameter file (alternative to --params)")
    fwd.add_argument("--csv", help="also write the pattern table as CSV")
    for name, text in (("recover", "fiber report with recovered parameters"), ("fiber", "classification only")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("input", help="coordinate file (p, lambda, mu or kappa)")
    sw = sub.add_parser("switch", parents=[common], help="apply local sign switches")
    sw.add_argument("nodes", nargs="+", help="inner nodes (names or ids)")
    st = sub.add_parser("selftest", parents=[common], help="run the built-in checks")
    st.add_argument("--suite", action="append", default=[], choices=sorted(selftest.SUITES))
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    inputs = [args.input] if getattr(args, "input", None) else []
    return RunConfig(
        command=args.command, inputs=inputs, tree=args.tree, params=args.params, chart=args.chart,
        eps=args.eps, out=args.out, csv=getattr(args, "csv", None), precision=args.precision,
        seed=args.seed, suites=getattr(args, "suite", []), nodes=getattr(args, "nodes", []),
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        cfg = _config(args)
        return COMMANDS[cfg.command](cfg)
    except OffModelError as exc:
        sys.stderr.write(f"off-model data ({exc.check or 'check'}): {exc}\n")
        return EXIT_OFF_MODEL
    except (InputError, ConstraintError, DegenerateMarginError, TreeError, OSError,
            json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT
    except (AssertionError, ArithmeticError) as exc:  # pragma: no cover - defensive
        sys.stderr.write(f"internal invariant failure: {exc}\n")
        return EXIT_INVARIANT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
