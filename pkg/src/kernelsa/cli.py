"""Command line interface.

Four verbs: ``run`` (the sequential loop), ``analyze`` (indices from an
existing design file), ``oracle`` (Monte-Carlo reference estimates of a
builtin benchmark) and ``design`` (emit an initial Latin hypercube). Every
``run`` flag mirrors a key in the flat key-value config file; a flag given on
the command line wins over the file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import benchmarks, design as design_mod, mc, workflow
from .core import InputSpace, KernelSaError, denormalize

_BOOL_WORDS = {
    "true": True, "yes": True, "on": True, "1": True,
    "false": False, "no": False, "off": False, "0": False,
}


def _parse_bool(text: str) -> bool:
    try:
        return _BOOL_WORDS[text.strip().lower()]
    except KeyError:
        raise ValueError(f"expected a boolean, got {text!r}") from None


def _parse_floats(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _parse_names(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _parse_ard(text: str):
    text = text.strip().lower()
    if text == "auto":
        return None
    return _parse_bool(text)


def _parse_interactions(text: str):
    """"1,2;1,3" -> ((0, 1), (0, 2)) using the 1-based dims of the CSV columns."""
    groups = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        groups.append(tuple(int(i) - 1 for i in chunk.split(",")))
    return tuple(groups)


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment, blank lines skipped."""
    options: dict[str, str] = {}
    for ln, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{ln}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        options[key.strip().lower()] = value.strip()
    return options


# config keys -> parser from the file's string form
_RUN_KEYS = {
    "simulator": str,
    "command": str,
    "names": _parse_names,
    "lower": _parse_floats,
    "upper": _parse_floats,
    "kernel": str,
    "mode": str,
    "ard": _parse_ard,
    "gamma": float,
    "n0": int,
    "batch": int,
    "budget": int,
    "infill": str,
    "family": str,
    "criterion": str,
    "threshold": float,
    "folds": int,
    "consecutive": int,
    "quad_order": int,
    "seed": int,
    "outdir": str,
    "timeout": float,
    "plots": _parse_bool,
    "interactions": _parse_interactions,
}


def _merge_options(args: argparse.Namespace, keys) -> dict:
    """File options first, then every explicitly given CLI flag on top."""
    merged: dict = {}
    if getattr(args, "config", None):
        file_options = read_config_file(args.config)
        unknown = set(file_options) - set(keys)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key, text in file_options.items():
            merged[key] = keys[key](text)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = keys[key](value) if isinstance(value, str) else value
    return merged


def _resolve_space(options: dict) -> InputSpace:
    simulator = options.get("simulator")
    lower, upper = options.get("lower"), options.get("upper")
    if simulator is not None:
        if lower is not None or upper is not None:
            raise ValueError("builtin simulators fix the input space; drop lower/upper")
        return benchmarks.get_benchmark(simulator).space
    if lower is None or upper is None:
        raise ValueError("external commands need both lower and upper bounds")
    if len(lower) != len(upper):
        raise ValueError(f"lower has {len(lower)} entries, upper has {len(upper)}")
    names = options.get("names")
    if names is None:
        return InputSpace.box(lower, upper)
    if len(names) != len(lower):
        raise ValueError(f"{len(names)} names for {len(lower)} bounds")
    return InputSpace(tuple(zip(names, lower, upper)))


def _space_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--simulator", help="builtin benchmark name")
    parser.add_argument("--command", help="external simulator command line")
    parser.add_argument("--names", help="comma-separated input names")
    parser.add_argument("--lower", help="comma-separated lower bounds")
    parser.add_argument("--upper", help="comma-separated upper bounds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kernelsa",
        description="Global sensitivity indices from kernel surrogates on sequential designs.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="run the sequential loop to convergence or budget")
    run_p.add_argument("--config", help="flat key=value config file; flags override it")
    _space_args(run_p)
    run_p.add_argument("--kernel", choices=("matern32", "se"))
    run_p.add_argument("--mode", choices=("interpolating", "regularized"))
    run_p.add_argument("--ard", help="auto, true or false")
    run_p.add_argument("--gamma", type=float, help="regularization weight (regularized mode)")
    run_p.add_argument("--n0", type=int, help="initial design size")
    run_p.add_argument("--batch", type=int)
    run_p.add_argument("--budget", type=int)
    run_p.add_argument("--infill", choices=workflow.INFILL_METHODS)
    run_p.add_argument("--family", choices=("sobol_main", "sobol_total", "dgsm", "dgsm_normalized"))
    run_p.add_argument("--criterion", choices=workflow.CRITERIA)
    run_p.add_argument("--threshold", type=float, help="stopping threshold (required)")
    run_p.add_argument("--folds", type=int)
    run_p.add_argument("--consecutive", type=int)
    run_p.add_argument("--quad-order", dest="quad_order", type=int)
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--outdir")
    run_p.add_argument("--timeout", type=float, help="per-batch simulator timeout in seconds")
    run_p.add_argument("--plots", help="true or false")
    run_p.add_argument("--interactions", help="1-based groups like '1,2;1,3'")
    run_p.add_argument("--resume", action="store_true",
                       help="continue from flushed files in the output directory")

    an_p = sub.add_parser("analyze", help="indices from an existing design file, no sampling")
    an_p.add_argument("design_file")
    an_p.add_argument("--config", help="flat key=value config file; flags override it")
    _space_args(an_p)
    an_p.add_argument("--kernel", choices=("matern32", "se"))
    an_p.add_argument("--mode", choices=("interpolating", "regularized"))
    an_p.add_argument("--ard", help="auto, true or false")
    an_p.add_argument("--gamma", type=float)
    an_p.add_argument("--quad-order", dest="quad_order", type=int)
    an_p.add_argument("--seed", type=int)
    an_p.add_argument("--outdir")
    an_p.add_argument("--plots", help="true or false")
    an_p.add_argument("--interactions", help="1-based groups like '1,2;1,3'")

    or_p = sub.add_parser("oracle", help="Monte-Carlo reference estimates of a builtin benchmark")
    or_p.add_argument("simulator", help="builtin benchmark name")
    or_p.add_argument("--base-n", dest="base_n", type=int, default=2**14,
                      help="pick-freeze base sample count (power of two)")
    or_p.add_argument("--seed", type=int, default=0)
    or_p.add_argument("--no-dgsm", dest="dgsm", action="store_false",
                      help="skip the gradient-based measures")
    or_p.add_argument("--out", help="write the estimates to this JSON file")

    de_p = sub.add_parser("design", help="emit an initial Latin hypercube design")
    _space_args(de_p)
    de_p.add_argument("--n", type=int, required=True, help="number of points")
    de_p.add_argument("--seed", type=int, default=0)
    de_p.add_argument("--no-optimize", dest="optimize", action="store_false",
                      help="skip the maximin swap optimization")
    de_p.add_argument("--out", help="output CSV file (default: stdout)")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    options = _merge_options(args, _RUN_KEYS)
    space = _resolve_space(options)
    for key in ("names", "lower", "upper"):
        options.pop(key, None)
    if "threshold" not in options:
        raise ValueError("a stopping threshold is required (flag --threshold or config key)")
    config = workflow.RunConfig(space=space, **options)
    report, trace, data = workflow.run(config, resume=args.resume)
    last = trace.records[-1]
    print(f"stopped after {len(trace)} iterations at N={data.n}")
    print(f"criterion ({config.family} {config.criterion}): "
          f"{last.criterion_values[config.criterion]:.6g} vs threshold {config.threshold:g}")
    for i, name in enumerate(space.names):
        print(f"  {name}: S={report.main[i]:.4f} ST={report.total[i]:.4f} nu={report.dgsm[i]:.4g}")
    print(f"outputs in {Path(config.outdir).resolve()}")
    return 0


_ANALYZE_KEYS = {key: _RUN_KEYS[key] for key in (
    "simulator", "names", "lower", "upper", "kernel", "mode", "ard", "gamma",
    "quad_order", "seed", "outdir", "plots", "interactions",
)}
# an analyze config may be a full run config; tolerate the extra keys
_ANALYZE_TOLERATED = dict(_RUN_KEYS)


def _cmd_analyze(args: argparse.Namespace) -> int:
    options = _merge_options(args, _ANALYZE_TOLERATED)
    space = _resolve_space(options)
    kwargs = {key: options[key] for key in _ANALYZE_KEYS
              if key in options and key not in ("simulator", "names", "lower", "upper")}
    report, _ = workflow.analyze(args.design_file, space, **kwargs)
    print(f"total variance: {report.total_variance:.6g}")
    for i, name in enumerate(space.names):
        print(f"  {name}: S={report.main[i]:.4f} ST={report.total[i]:.4f} nu={report.dgsm[i]:.4g}")
    outdir = options.get("outdir") or str(Path(args.design_file).parent)
    print(f"report in {Path(outdir).resolve()}")
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    bench = benchmarks.get_benchmark(args.simulator)
    d = bench.space.d
    est = mc.saltelli_estimate(bench.unit_function(), d, args.base_n, seed=args.seed)
    payload = {
        "simulator": args.simulator,
        "base_n": args.base_n,
        "seed": args.seed,
        "variance": float(est.variance),
        "main": est.main.tolist(),
        "main_se": est.main_se.tolist(),
        "total": est.total.tolist(),
        "total_se": est.total_se.tolist(),
    }
    if args.dgsm:
        grad = mc.mc_dgsm(bench.unit_gradient(), d, args.base_n, seed=args.seed)
        payload["dgsm"] = grad.nu.tolist()
        payload["dgsm_se"] = grad.se.tolist()
    print(f"{args.simulator}: variance {est.variance:.6g} "
          f"(pick-freeze, base_n={args.base_n}, seed={args.seed})")
    for i, name in enumerate(bench.space.names):
        line = (f"  {name}: S={est.main[i]:+.4f} (se {est.main_se[i]:.4f})"
                f" ST={est.total[i]:.4f} (se {est.total_se[i]:.4f})")
        if args.dgsm:
            line += f" nu={payload['dgsm'][i]:.4g}"
        print(line)
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                                  encoding="utf-8")
        print(f"written to {args.out}")
    return 0


def _cmd_design(args: argparse.Namespace) -> int:
    options = _merge_options(args, _RUN_KEYS)
    space = _resolve_space(options)
    unit = design_mod.initial_lhs(space.d, args.n, seed=args.seed, optimize=args.optimize)
    physical = denormalize(space, unit)
    lines = [",".join(space.names)]
    lines += [",".join(repr(float(v)) for v in row) for row in physical]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"{args.n} points written to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "analyze": _cmd_analyze,
        "oracle": _cmd_oracle,
        "design": _cmd_design,
    }
    try:
        return handlers[args.verb](args)
    except (KernelSaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
