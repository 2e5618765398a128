"""Command-line entry point.

Subcommands: synth, pretrain, adapt, eval, ablate, gradcheck. Each consumes a
JSON config (see config.py for the schema) plus ``--seed`` and ``--out``
overrides. Exit codes: 0 success, 1 contract/configuration error, 2 I/O
error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .bench import run_ablation, run_benchmark
from .config import config_hash, load_config
from .errors import ContractError
from .pnm import load_dataset, save_dataset
from .synth import generate_dataset
from .train import adapt, pretrain


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the CLI contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ContractError(message)


def _build_parser():
    parser = _Parser(prog="xvos", description=__doc__)
    sub = parser.add_subparsers(dest="command")
    for name, help_text in [
            ("synth", "generate a synthetic RGB-X dataset"),
            ("pretrain", "stage 1: train the RGB foundation model"),
            ("adapt", "stage 2: multi-modal adaptation of a frozen model"),
            ("eval", "run J/F/J&F benchmark over a dataset"),
            ("ablate", "train and score the ablation variant table"),
            ("gradcheck", "finite-difference verification suite")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=name != "gradcheck",
                       help="JSON config path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="output path")
    return parser


def _need_out(args):
    if not args.out:
        raise ContractError(f"'{args.command}' requires --out")
    return args.out


def _load(args):
    cfg = load_config(args.config)
    return cfg


def _training_data(cfg, data_dir, synth_seed):
    if data_dir:
        return load_dataset(data_dir)
    scfg = dataclasses.replace(cfg.synth, seed=synth_seed)
    return generate_dataset(scfg)


def cmd_synth(args):
    cfg = _load(args)
    out = _need_out(args)
    seed = args.seed if args.seed is not None else cfg.synth.seed
    scfg = dataclasses.replace(cfg.synth, seed=seed)
    samples = generate_dataset(scfg)
    save_dataset(out, samples)
    print(f"wrote {len(samples)} sequences to {out}")
    return 0


def cmd_pretrain(args):
    cfg = _load(args)
    out = _need_out(args)
    seed = args.seed if args.seed is not None else cfg.pretrain.seed
    data = _training_data(cfg, cfg.pretrain.data_dir, seed)
    _, history = pretrain(cfg.model, cfg.pretrain, data, seed=seed, out=out,
                          log=True)
    if history:
        print(f"pretrain done: step-1 loss {history[0][1]:.4f}, final "
              f"{history[-1][1]:.4f}; checkpoint at {out}")
    return 0


def cmd_adapt(args):
    cfg = _load(args)
    out = _need_out(args)
    seed = args.seed if args.seed is not None else cfg.adapt.seed
    data = _training_data(cfg, cfg.adapt.data_dir, seed)
    _, report, history = adapt(cfg.adapt, cfg.adapt.init_checkpoint, data,
                               seed=seed, out=out, log=True)
    print(report)
    if history:
        print(f"adapt done: step-1 loss {history[0][1]:.4f}, final "
              f"{history[-1][1]:.4f}; checkpoint at {out}")
    return 0


def cmd_eval(args):
    cfg = _load(args)
    seed = args.seed if args.seed is not None else cfg.eval.seed
    if not cfg.eval.checkpoint or not cfg.eval.dataset_dir:
        raise ContractError("eval needs eval.checkpoint and "
                            "eval.dataset_dir in the config")
    report = run_benchmark(cfg.eval.checkpoint, cfg.eval.dataset_dir,
                           cfg.eval.mode, out=args.out,
                           tol=cfg.eval.boundary_tol,
                           cfg_hash=config_hash(cfg, seed))
    print(json.dumps(report.to_dict(), indent=1, sort_keys=True))
    return 0


def cmd_ablate(args):
    cfg = _load(args)
    seed = args.seed if args.seed is not None else cfg.ablate.seed
    report = run_ablation(cfg.model, cfg.synth, cfg.ablate, seed=seed,
                          out=args.out, cfg_hash=config_hash(cfg, seed),
                          log=True)
    print("\n".join(report.csv_lines()))
    return 0


def cmd_gradcheck(args):
    from .verify import run_full_gradcheck
    results, worst = run_full_gradcheck()
    width = max(len(k) for k in results)
    for name in sorted(results):
        print(f"{name:<{width}}  {results[name]:.3e}")
    print(f"max relative error: {worst:.3e}")
    if worst >= 1e-4:
        print("FAIL: exceeds 1e-4", file=sys.stderr)
        return 1
    return 0


_COMMANDS = {"synth": cmd_synth, "pretrain": cmd_pretrain,
             "adapt": cmd_adapt, "eval": cmd_eval, "ablate": cmd_ablate,
             "gradcheck": cmd_gradcheck}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        return _COMMANDS[args.command](args)
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, NotADirectoryError, PermissionError,
            IsADirectoryError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
