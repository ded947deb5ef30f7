"""Command-line interface: ``sigverify {gendata,enroll,verify,evaluate,sweep}``.

Exit status is 0 on success, 1 on a domain or I/O error and 2 on a usage
error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import (GeneratorConfig, Protocol, generate_synthetic, load_dataset,
                      make_trial_split, read_samples, write_dataset)
from .errors import ConfigError, ParseError, SigVerifyError
from .evaluation import (EvaluationConfig, enroll_split, run_protocol, sweep_feature_counts,
                         trial_seed, write_curve_csv, write_report, write_sweep_csv)
from .knowledgebase import Knowledgebase, load_knowledgebase, save_knowledgebase, timestamp
from .symbolic_model import verify

PROTOCOLS = [p.value.lower() for p in Protocol]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def truth_path(corpus_path) -> Path:
    """``corpus.csv`` -> ``corpus.truth.json``."""
    p = Path(corpus_path)
    return p.with_name(p.stem + ".truth.json")


def parse_d_list(text: str) -> list[int]:
    """``"5,10,20"`` or the arithmetic shorthand ``"5,10,...,75"``."""
    parts = [t.strip() for t in text.split(",") if t.strip()]
    try:
        if "..." in parts:
            k = parts.index("...")
            if k != 2 or len(parts) != 4:
                raise ValueError
            a, b, end = int(parts[0]), int(parts[1]), int(parts[3])
            if b <= a:
                raise ValueError
            return list(range(a, end + 1, b - a))
        return [int(t) for t in parts]
    except ValueError:
        raise ConfigError(f"cannot parse feature-count list {text!r}") from None


def tau_grid(tmin, tmax, step) -> tuple:
    if step <= 0 or not 0 <= tmin <= tmax <= 1:
        raise ConfigError("need 0 <= tau-min <= tau-max <= 1 and tau-step > 0")
    n = int(np.floor((tmax - tmin) / step + 1e-9)) + 1
    return tuple(float(round(tmin + i * step, 10)) for i in range(n))


# ---------------------------------------------------------------------------
# Parser


def _model_flags(p):
    p.add_argument("--data", required=True, help="corpus CSV")
    p.add_argument("--protocol", type=str.lower, choices=PROTOCOLS, default="skilled_20")
    p.add_argument("--d", type=int, default=None,
                   help="features per user (default: 60 for *_05, 50 for *_20)")
    p.add_argument("--clusters", type=int, default=None,
                   help="fuzzy clusters per user (default: 3 with >= 15 samples, else 1)")
    p.add_argument("--alpha", type=float, default=2.0, help="interval half-width in stds")
    p.add_argument("--p", type=int, default=5, help="nearest neighbours in the graph")
    p.add_argument("--kc", type=int, default=5, help="eigenvectors regressed")
    p.add_argument("--m", type=float, default=2.0, help="fuzzifier")
    p.add_argument("--weighting", choices=["binary", "heat_kernel", "dot_product"],
                   default="heat_kernel")
    p.add_argument("--heat-sigma", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--share-training", action="store_true",
                   help="same training draws for Skilled and Random protocols of equal size")
    p.add_argument("--config", help="JSON file of flag defaults (explicit flags win)")


def _eval_flags(p):
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--tau-min", type=float, default=0.1)
    p.add_argument("--tau-max", type=float, default=0.9)
    p.add_argument("--tau-step", type=float, default=0.05)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for trials")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sigverify",
                     description="Writer-dependent signature verification with per-user "
                                 "feature selection and interval-valued references.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gendata", help="write a synthetic corpus and its ground truth")
    g.add_argument("--users", type=int, default=20)
    g.add_argument("--genuine", type=int, default=25)
    g.add_argument("--forgery", type=int, default=25)
    g.add_argument("--features", type=int, default=50)
    g.add_argument("--planted", type=int, default=5)
    g.add_argument("--separation", type=float, default=4.0)
    g.add_argument("--noise", type=float, default=1.0)
    g.add_argument("--spread", type=float, default=3.0)
    g.add_argument("--mean-scale", type=float, default=10.0)
    g.add_argument("--styles", type=int, default=1)
    g.add_argument("--style-scale", type=float, default=0.0)
    g.add_argument("--background-style", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--config", help="JSON file of flag defaults (explicit flags win)")

    e = sub.add_parser("enroll", help="enroll every user and write a knowledgebase")
    _model_flags(e)
    e.add_argument("--tau", type=float, default=0.5, help="decision threshold stored per user")
    e.add_argument("--out", required=True, help="knowledgebase JSON")
    e.add_argument("--fixed-time", action="store_true", help="write a constant timestamp")

    v = sub.add_parser("verify", help="verify one signature against a claimed user")
    v.add_argument("--kb", required=True)
    v.add_argument("--user", required=True)
    v.add_argument("--sample", required=True, help="one-row CSV without a label column")
    v.add_argument("--tau", type=float, default=None, help="default: the user's stored tau")

    ev = sub.add_parser("evaluate", help="run a protocol and report FAR/FRR/EER")
    _model_flags(ev)
    _eval_flags(ev)
    ev.add_argument("--report", help="report JSON")
    ev.add_argument("--curves", help="trial-averaged tau,far,frr CSV")

    sw = sub.add_parser("sweep", help="mean EER over a list of feature counts")
    _model_flags(sw)
    _eval_flags(sw)
    sw.add_argument("--d-list", default="5,10,...,75")
    sw.add_argument("--report", help="d,mean_eer CSV")
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults taken from ``--config`` when given."""
    args = parser.parse_args(argv)
    path = getattr(args, "config", None)
    if not path:
        return args
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            raise ConfigError(f"{path}: unknown option {key!r} for {args.command}")
        defaults[dest] = value
    sub.set_defaults(**defaults)
    args = parser.parse_args(argv)
    if getattr(args, "protocol", None) is not None:
        args.protocol = str(args.protocol).lower()
        if args.protocol not in PROTOCOLS:
            raise ConfigError(f"{path}: unknown protocol {args.protocol!r}")
    return args


# ---------------------------------------------------------------------------
# Commands


def _eval_config(args, **extra) -> EvaluationConfig:
    return EvaluationConfig(
        d=args.d, p=args.p, weighting=args.weighting, heat_sigma=args.heat_sigma,
        n_eigenvectors=args.kc, n_clusters=args.clusters, m=args.m, alpha=args.alpha,
        master_seed=args.seed, share_training=args.share_training, **extra)


def cmd_gendata(args, out):
    cfg = GeneratorConfig(
        n_users=args.users, genuine_per_user=args.genuine, forgery_per_user=args.forgery,
        n_features=args.features, n_planted=args.planted, separation=args.separation,
        noise=args.noise, spread=args.spread, mean_scale=args.mean_scale,
        n_styles=args.styles, style_scale=args.style_scale,
        background_style=args.background_style)
    dataset, truth = generate_synthetic(cfg, args.seed)
    write_dataset(dataset, args.out)
    sidecar = truth_path(args.out)
    with open(sidecar, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(truth.to_json())
    print(f"wrote {len(dataset)} samples of {len(dataset.users)} users to {args.out}", file=out)
    print(f"wrote ground truth to {sidecar}", file=out)


def cmd_enroll(args, out):
    dataset = load_dataset(args.data)
    protocol = Protocol.parse(args.protocol)
    if not 0 <= args.tau <= 1:
        raise ConfigError(f"tau={args.tau} must lie in [0, 1]")
    config = _eval_config(args)
    seed = trial_seed(config.master_seed, protocol, 0, config.share_training)
    split = make_trial_split(dataset, protocol, seed)
    params = dataclasses.replace(config.enrollment(protocol, seed), tau=args.tau)
    models = enroll_split(split, params)
    echo = config.echo()
    for key in ("n_trials", "tau_grid"):
        echo.pop(key)
    echo.update(protocol=protocol.value, d=config.feature_count(protocol), tau=args.tau,
                data=os.path.basename(args.data))
    kb = Knowledgebase(models, timestamp(args.fixed_time), echo)
    save_knowledgebase(kb, args.out)
    print(f"enrolled {len(kb)} users ({kb.reference_count} reference signatures, "
          f"d={echo['d']}) -> {args.out}", file=out)


def cmd_verify(args, out):
    kb = load_knowledgebase(args.kb)
    model = kb.models[args.user]
    samples = read_samples(args.sample, labelled=False)
    if len(samples) != 1:
        raise ParseError(f"expected exactly one signature, found {len(samples)}",
                         path=args.sample)
    result = verify(samples[0], model, args.tau)
    print(f"user {args.user}", file=out)
    print(f"A_c {result.acceptance_count}", file=out)
    print(f"d {result.d}", file=out)
    print(f"tau {result.tau_used:g}", file=out)
    print("ACCEPT" if result.accepted else "REJECT", file=out)


def cmd_evaluate(args, out):
    dataset = load_dataset(args.data)
    config = _eval_config(args, n_trials=args.trials, jobs=args.jobs,
                          tau_grid=tau_grid(args.tau_min, args.tau_max, args.tau_step))
    report = run_protocol(dataset, args.protocol, config)
    if args.report:
        write_report(report, args.report)
    if args.curves:
        write_curve_csv(report, args.curves)
    eers = ", ".join(f"{100 * e:.2f}" for e in report.trial_eers)
    print(f"{report.protocol.value}: mean EER {100 * report.mean_eer:.2f}% "
          f"over {len(report.trial_eers)} trials (d={report.params['d']})", file=out)
    print(f"trial EERs (%): {eers}", file=out)


def cmd_sweep(args, out):
    dataset = load_dataset(args.data)
    d_values = parse_d_list(args.d_list)
    config = _eval_config(args, n_trials=args.trials, jobs=args.jobs,
                          tau_grid=tau_grid(args.tau_min, args.tau_max, args.tau_step))
    rows = sweep_feature_counts(dataset, args.protocol, d_values, config)
    if args.report:
        write_sweep_csv(rows, args.report)
    print(f"{Protocol.parse(args.protocol).value}", file=out)
    print("    d  mean EER (%)", file=out)
    for d, eer in rows:
        print(f"{d:5d}  {100 * eer:8.2f}", file=out)


COMMANDS = {
    "gendata": cmd_gendata,
    "enroll": cmd_enroll,
    "verify": cmd_verify,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
}


def run_cli(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(exc, file=err)
        return 2
    except SystemExit as exc:  # --help / --version
        return exc.code if isinstance(exc.code, int) else 0
    except (SigVerifyError, OSError) as exc:
        print(f"error: {exc}", file=err)
        return 1
    return 0


def main():
    sys.exit(run_cli())
