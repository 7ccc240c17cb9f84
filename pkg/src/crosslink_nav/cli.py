"""Command line interface: ``crosslink-nav <subcommand> --config scenario.json``."""

import argparse
import logging
import sys

from .config import load_scenario
from .dynamics import jacobi_constant
from .exceptions import ConfigError, FilterDivergenceError, IntegrationError
from .outputs import ArtifactWriter, write_montecarlo, write_observability, write_simulation, write_truth
from .radiometrics import RANGE, RANGE_RATE
from .scenario import build_scenario, link_budget, observability, run_monte_carlo, simulate

log = logging.getLogger("crosslink_nav")


def _common(p):
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    p.add_argument("--fixed-step", type=float, default=None, metavar="SECONDS", help="RK4 step override")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    ap = argparse.ArgumentParser(prog="crosslink-nav", description="Crosslink-only cislunar navigation simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("propagate", help="propagate the truth trajectory")
    _common(p)
    p.add_argument("--dynamics", choices=("crtbp", "nbody"), default=None)

    p = sub.add_parser("simulate", help="single filter run with all artifacts")
    _common(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--bias-mode", choices=("neglect", "estimate", "consider"), default=None)
    p.add_argument("--dynamics", choices=("crtbp", "nbody"), default=None)

    p = sub.add_parser("montecarlo", help="Monte Carlo campaign with RMSE statistics")
    _common(p)
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--bias-mode", choices=("neglect", "estimate", "consider"), default=None)
    p.add_argument("--dynamics", choices=("crtbp", "nbody"), default=None)

    p = sub.add_parser("observability", help="observability Gramian of the scenario")
    _common(p)
    p.add_argument("--measurement", choices=("range", "range-rate"), default=None)
    p.add_argument("--rule", choices=("dominant", "energy"), default="dominant")

    p = sub.add_parser("linkbudget", help="radiometric error budget")
    _common(p)
    return ap


def _propagate(args, cfg):
    scn = build_scenario(cfg, args.dynamics, args.fixed_step)
    truth = scn.ensure_truth()
    w = ArtifactWriter(args.out, args.format)
    write_truth(w, scn.epochs_s, truth, scn.params)
    info = {"scenario": cfg.name, "dynamics": args.dynamics or cfg.dynamics.model, "frame": scn.frame,
            "nodes": int(scn.times.size), "step_s": scn.flow.step_s}
    if scn.frame == "rotating":
        c = [jacobi_constant(x, scn.params) for x in (truth[0, :6], truth[-1, :6], truth[0, 6:], truth[-1, 6:])]
        info["jacobi_relative_drift"] = {"lumio": abs(c[1] - c[0]) / abs(c[0]), "lpf": abs(c[3] - c[2]) / abs(c[2])}
    w.document("summary", info)
    return w.manifest


def _simulate(args, cfg):
    sim = simulate(cfg, args.seed, args.bias_mode, args.dynamics, args.fixed_step)
    if sim.summary["diverged"]:
        log.warning("filter diverged; outputs are truncated at the divergence epoch")
    return write_simulation(ArtifactWriter(args.out, args.format), sim)


def _montecarlo(args, cfg):
    if args.runs < 1:
        raise ConfigError("--runs must be >= 1")
    mc = run_monte_carlo(cfg, args.runs, args.seed, args.workers, args.bias_mode, args.dynamics, args.fixed_step)
    if mc.n_excluded:
        log.warning("%d of %d runs diverged and were excluded", mc.n_excluded, args.runs)
    w = ArtifactWriter(args.out, args.format)
    write_montecarlo(w, mc)
    return w.manifest


def _observability(args, cfg):
    scn = build_scenario(cfg, None, args.fixed_step)
    kind = {"range": RANGE, "range-rate": RANGE_RATE, None: None}[args.measurement]
    report = observability(scn, kind, args.rule)
    w = ArtifactWriter(args.out, args.format)
    write_observability(w, report)
    print(f"condition number       {report.condition_number:.6e}")
    print(f"unobservability index  {report.unobservability_index:.6e}")
    print("ranking                " + " ".join(report.state_ranking))
    return w.manifest


def _linkbudget(args, cfg):
    rows = link_budget(cfg).table()
    for name, value, unit in rows:
        print(f"{name:32s} {value:14.6f} {unit}")
    w = ArtifactWriter(args.out, args.format)
    w.table("linkbudget", ["quantity", "value", "unit"], rows)
    return w.manifest


COMMANDS = {
    "propagate": _propagate,
    "simulate": _simulate,
    "montecarlo": _montecarlo,
    "observability": _observability,
    "linkbudget": _linkbudget,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = load_scenario(args.config)
        manifest = COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return 2
    except (IntegrationError, FilterDivergenceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for name in manifest:
        log.info("wrote %s", name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
