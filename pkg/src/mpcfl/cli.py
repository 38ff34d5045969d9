"""Command-line entry point.

    mpcfl run   [--parties N --topology two-phase ...]   one experiment, JSON report
    mpcfl sweep --n-values 4,8,16 --topologies p2p,two-phase   CSV summary
    mpcfl costs --n-min 4 --n-max 128                          closed-form CSV
    mpcfl gen-data --out DIR                                   synthetic CSV datasets

``run`` is implied when the first argument is a flag.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import cost_model
from .errors import ConfigError, MPCFLError, UsageError
from .learner import gen_synthetic
from .orchestrator import ExperimentConfig, rows_to_csv, run_experiment, run_matrix, sweep_configs, write_datasets

SUBCOMMANDS = ("run", "sweep", "costs", "gen-data")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    d = ExperimentConfig()
    p.add_argument("--parties", type=int, default=d.n, help="number of FL parties n")
    p.add_argument("--local-iters", type=int, default=d.t, help="local gradient steps per epoch t")
    p.add_argument("--epochs", type=int, default=d.e, help="global epochs e")
    p.add_argument("--committee", type=int, default=d.m, help="committee size m")
    p.add_argument("--batch", type=int, default=d.b, help="votes per party per election round b")
    p.add_argument("--scheme", choices=["additive", "shamir"], default=d.scheme)
    p.add_argument("--topology", choices=["p2p", "two-phase", "plaintext"], default=d.topology)
    p.add_argument("--model", choices=["simple", "complex"], default=d.model)
    p.add_argument("--mode", choices=["local", "centralized", "federated", "all"], default=d.mode)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--data", default=d.data, help="'synthetic' or a directory of party_<k>.csv files")
    p.add_argument("--shift", type=float, default=d.shift, help="per-party heterogeneity of synthetic data")
    p.add_argument("--rows", type=int, default=d.rows_per_party, help="synthetic rows per party")
    p.add_argument("--lr", type=float, default=d.lr)
    p.add_argument("--max-rounds", type=int, default=d.max_rounds, help="election round limit")


def _config_from(ns: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(
        n=ns.parties,
        t=ns.local_iters,
        e=ns.epochs,
        m=ns.committee,
        b=ns.batch,
        scheme=ns.scheme,
        topology=ns.topology,
        model=ns.model,
        mode=ns.mode,
        seed=ns.seed,
        data=ns.data,
        shift=ns.shift,
        rows_per_party=ns.rows,
        lr=ns.lr,
        max_rounds=ns.max_rounds,
        out=getattr(ns, "out", None),
        log_path=getattr(ns, "log", None),
    )
    return cfg.validate()


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mpcfl", description="MPC-enabled federated learning simulator")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    run = sub.add_parser("run", help="run one experiment and write a JSON report")
    _add_experiment_flags(run)
    run.add_argument("--out", help="report JSON path (default: stdout)")
    run.add_argument("--log", help="write the delivery log to this path")

    sweep = sub.add_parser("sweep", help="run experiments over n and topology, CSV summary")
    _add_experiment_flags(sweep)
    sweep.add_argument("--n-values", type=_int_list, default=[4, 8, 16, 32])
    sweep.add_argument("--topologies", default="p2p,two-phase")
    sweep.add_argument("--simulate-only", action="store_true", help="skip training, count traffic only")
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--out", help="CSV path (default: stdout)")

    costs = sub.add_parser("costs", help="closed-form message counts as CSV")
    costs.add_argument("--n-min", type=int, default=4)
    costs.add_argument("--n-max", type=int, default=128)
    costs.add_argument("--n-step", type=int, default=1)
    costs.add_argument("--topologies", default="p2p,two-phase")
    costs.add_argument("--epochs", type=int, default=15)
    costs.add_argument("--committee", type=int, default=3)
    costs.add_argument("--batch", type=int, default=10)
    costs.add_argument("--size", type=int, default=242, help="model size s in field elements")
    costs.add_argument("--variant", choices=cost_model.VARIANTS, default="paper")
    costs.add_argument("--out")

    gen = sub.add_parser("gen-data", help="write synthetic party datasets as CSV")
    gen.add_argument("--parties", type=int, default=4)
    gen.add_argument("--rows", type=int, default=200)
    gen.add_argument("--shift", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    return parser


def _normalise(argv) -> list[str]:
    argv = list(argv)
    if not argv or argv[0] not in SUBCOMMANDS and argv[0] not in ("-h", "--help"):
        argv = ["run", *argv]
    return argv


def parse_cli(argv) -> ExperimentConfig:
    """Flags of the ``run`` command to a validated config. Unknown flags raise UsageError."""
    argv = _normalise(argv)
    if argv[0] != "run":
        raise UsageError(f"parse_cli handles the run command, got {argv[0]!r}")
    ns = build_parser().parse_args(argv)
    return _config_from(ns)


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    argv = _normalise(sys.argv[1:] if argv is None else argv)
    try:
        ns = build_parser().parse_args(argv)
        if ns.command == "run":
            cfg = _config_from(ns)
            report = run_experiment(cfg)
            if not cfg.out:
                sys.stdout.write(report.to_json() + "\n")
        elif ns.command == "sweep":
            base = replace(_config_from(ns), out=None, log_path=None)
            topologies = [t.strip() for t in ns.topologies.split(",") if t.strip()]
            rows = run_matrix(sweep_configs(base, ns.n_values, topologies), train=not ns.simulate_only, jobs=ns.jobs)
            _emit(rows_to_csv(rows), ns.out)
        elif ns.command == "costs":
            topologies = [t.strip() for t in ns.topologies.split(",") if t.strip()]
            rows = cost_model.cost_table(
                range(ns.n_min, ns.n_max + 1, ns.n_step),
                topologies,
                e=ns.epochs,
                m=ns.committee,
                b=ns.batch,
                s=ns.size,
                variant=ns.variant,
            )
            _emit(rows_to_csv(rows, ["n", "topology", "msg_num", "msg_size"]), ns.out)
        elif ns.command == "gen-data":
            sets, held = gen_synthetic(ns.parties, ns.rows, ns.shift, ns.seed)
            root = write_datasets(sets, held, ns.out)
            print(f"wrote {len(sets)} party files and heldout.csv to {root}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, MPCFLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
