"""Command-line entry point: ``hcburger <subcommand> ...``.

Exit codes: 0 success or passing experiment, 1 failing experiment, 2 usage error.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path

import numpy as np

from .brownian import (BmConfig, ExcursionWindow, sample_bridge, sample_correlated_bm,
                       sample_excursion, sample_meander, write_density_csv)
from .cone import lattice_path
from .errors import BurgerError
from .experiments import EXPERIMENT_IDS, make_spec, run_experiment
from .loops import loop_forest
from .sampler import derive_params, iid_word, sample_empty_reduction, sample_no_burgers_backward
from .words import Word, counts, match_indices, reduce, resolve_flex

USAGE_ERROR = 2

# which experiment parameter each generic flag sets
FLAG_TARGETS = {
    "replicas": {"E1": ["replicas"], "E3": ["replicas"], "E4": ["replicas"], "E5": ["replicas"],
                 "E6": ["samples", "control_samples"], "E7": ["meanders"], "E8": ["words"],
                 "E9": ["closed_words", "iid_words"]},
    "n": {"E8": ["n"], "E9": ["closed_n"]},
    "dt": {k: ["dt"] for k in ("E5", "E6", "E7", "E8")},
    "delta": {k: ["delta"] for k in ("E7", "E8")},
    "cap_c": {k: ["C"] for k in ("E7", "E8")},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def read_config(path: str) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment; keys mirror the long flags."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _word(args) -> Word:
    return Word.from_text(args.word, args.origin)


@contextlib.contextmanager
def _output(path: str | None):
    if path:
        with open(path, "w", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _emit_json(obj, path):
    with _output(path) as fh:
        fh.write(json.dumps(obj, indent=2, default=str) + "\n")


def cmd_sample(args) -> int:
    params = derive_params(args.p)
    if args.kind == "iid":
        w = iid_word(params, args.n, args.origin, args.seed)
        meta = {}
    elif args.kind == "empty":
        rep = sample_empty_reduction(params, args.n, args.seed, args.max_trials, args.threads)
        w, meta = rep.word, {"trials": rep.trials, "acceptance_estimate": rep.acceptance_estimate}
    else:
        rep = sample_no_burgers_backward(params, args.n, args.seed, args.max_trials)
        w, meta = rep.word, {"trials": rep.trials, "acceptance_estimate": rep.acceptance_estimate}
    _emit_json({"word": w.text, "origin": w.origin, "p": args.p, "seed": args.seed, **meta},
               args.out)
    return 0


def cmd_reduce(args) -> int:
    w = _word(args)
    red = reduce(w)
    cv = counts(w)
    body = {k: (str(v) if k == "r" else v) for k, v in vars(cv).items()}
    _emit_json({"reduced": red.text, "orders": red.orders_text, "burgers": red.burgers_text,
                "counts": body}, args.out)
    return 0


def cmd_match(args) -> int:
    w = _word(args)
    m = match_indices(w)
    _emit_json({"pairs": {str(k): v for k, v in sorted(m.pairs.items())},
                "unmatched": sorted(m.unmatched)}, args.out)
    return 0


def cmd_path(args) -> int:
    w = _word(args)
    y = resolve_flex(w, match_indices(w))
    path = lattice_path(y, args.n_scale)
    with _output(args.out) as fh:
        path.write_csv(fh, scaled=args.scaled)
    return 0


def cmd_loops(args) -> int:
    w = _word(args)
    forest = loop_forest(w, match_indices(w))
    with _output(args.out) as fh:
        fh.write(forest.to_json(indent=2) + "\n")
    return 0


def cmd_bm_sample(args) -> int:
    cfg = BmConfig(args.p, args.dt, args.seed)
    if args.kind == "free":
        path = sample_correlated_bm(cfg, args.T)
    elif args.kind == "bridge":
        path = sample_bridge(cfg, args.T, args.start, args.end, in_quadrant=args.in_quadrant)
    elif args.kind == "meander":
        path = sample_meander(cfg, args.T, max_trials=args.max_trials)
    else:
        path = sample_excursion(cfg, ExcursionWindow(args.delta, args.cap_c),
                                max_trials=args.max_trials)
    with _output(args.out) as fh:
        path.write_csv(fh)
    print(json.dumps(path.meta), file=sys.stderr)
    return 0


def cmd_density(args) -> int:
    cfg = BmConfig(args.p)
    nodes = np.arange(args.grid_points) * args.grid_step
    with _output(args.out) as fh:
        write_density_csv(cfg, args.t, nodes, fh)
    return 0


def _experiment_params(key: str, args) -> dict:
    params = {}
    if args.p is not None:
        params["p"] = args.p
    for flag, targets in FLAG_TARGETS.items():
        val = getattr(args, flag)
        if val is not None and key in targets:
            for t in targets[key]:
                params[t] = val
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = json.loads(v)
    return params


def cmd_experiment(args) -> int:
    key = args.id.split("_")[0]
    if key not in EXPERIMENT_IDS:
        raise UsageError(f"unknown experiment id {args.id!r}; choose from {sorted(EXPERIMENT_IDS)}")
    try:
        spec = make_spec(key, args.seed, args.threads, **_experiment_params(key, args))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = run_experiment(spec)
    with _output(args.out) as fh:
        fh.write(report.to_json(indent=2) + "\n")
    return 0 if report.passed else 1


def cmd_report(args) -> int:
    ok = True
    lines = []
    for f in args.files:
        rep = json.loads(Path(f).read_text())
        ok &= bool(rep["pass"])
        lines.append(f"{rep['id']:<24} {'PASS' if rep['pass'] else 'FAIL'}  "
                     f"{rep['runtime_seconds']:8.1f}s  {f}")
    with _output(args.out) as fh:
        fh.write("\n".join(lines) + "\n")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="file of key=value lines mirroring the flags")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)

    parser = _Parser(prog="hcburger", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", parents=[common], help="sample a word")
    p.add_argument("--p", type=float, default=1 / 3)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kind", choices=["iid", "empty", "backward"], default="empty")
    p.add_argument("--origin", type=int, default=1)
    p.add_argument("--max-trials", type=int, default=10**8)
    p.set_defaults(func=cmd_sample)

    for name, func, hlp in [("reduce", cmd_reduce, "reduced word and counts"),
                            ("match", cmd_match, "match table"),
                            ("path", cmd_path, "lattice walk CSV"),
                            ("loops", cmd_loops, "loop forest JSON")]:
        p = sub.add_parser(name, parents=[common], help=hlp)
        p.add_argument("--word", required=True, help="text over the alphabet HChcF")
        p.add_argument("--origin", type=int, default=1)
        if name == "path":
            p.add_argument("--n-scale", type=int, default=1)
            p.add_argument("--scaled", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("bm-sample", parents=[common], help="Brownian reference path CSV")
    p.add_argument("--kind", choices=["free", "bridge", "meander", "excursion"], default="meander")
    p.add_argument("--p", type=float, default=1 / 3)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.02)
    p.add_argument("--cap-c", type=float, default=4.0)
    p.add_argument("--start", type=float, nargs=2, default=(0.0, 0.0))
    p.add_argument("--end", type=float, nargs=2, default=(0.0, 0.0))
    p.add_argument("--in-quadrant", action="store_true")
    p.add_argument("--max-trials", type=int, default=10**7)
    p.set_defaults(func=cmd_bm_sample)

    p = sub.add_parser("density", parents=[common], help="endpoint density table CSV")
    p.add_argument("--p", type=float, default=1 / 3)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--grid-step", type=float, default=0.1)
    p.add_argument("--grid-points", type=int, default=31)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("experiment", parents=[common], help="run one experiment, JSON report")
    p.add_argument("--id", required=True)
    p.add_argument("--p", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--replicas", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--cap-c", type=float)
    p.add_argument("--set", action="append", metavar="KEY=JSON",
                   help="override any experiment parameter")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", parents=[common], help="summarize report files")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_report)
    return parser


def _with_config(argv: list[str]) -> list[str]:
    """Append flags from ``--config FILE`` that the command line does not already set."""
    if "--config" not in argv:
        return argv
    k = argv.index("--config")
    if k + 1 >= len(argv):
        raise UsageError("--config needs a file name")
    extra = []
    for key, value in read_config(argv[k + 1]).items():
        flag = "--" + key.replace("_", "-")
        if flag not in argv:
            extra += [flag, value]
    return argv + extra


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_with_config(argv))
        return args.func(args)
    except UsageError as exc:
        print(f"hcburger: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (BurgerError, ValueError, OSError) as exc:
        print(f"hcburger: error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
