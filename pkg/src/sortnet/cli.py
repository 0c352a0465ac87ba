"""``sortnet`` command line.

Exit codes: 0 success (or a true/conclusive answer), 1 error, 2 a false or
inconclusive answer.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import __version__
from .encoder import EncodeOptions, decode_model, emit_dimacs, encode, registry_from_json
from .filters import FilterSet, catalog, complete_filter_set, count_layers, known_bounds
from .netcore import (
    ComparatorNetwork,
    NetworkError,
    all_words,
    evaluate,
    is_sorting_network,
    outputs,
    parse_network,
    str_to_word,
    trace,
    window_sum,
    word_to_str,
)
from .prefopt import OptimizerConfig, optimize_prefix
from .render import RenderSpec, render
from .satdriver import SAT, TIMEOUT, UNSAT, SolverConfig, attempt_extension, campaign, solve_file
from .suffix import enumerate_cosat_suffixes, enumerate_last_layers, validate_suffix_conditions

OK, ERROR, FALSE = 0, 1, 2
OPTION_NAMES = [f.name for f in fields(EncodeOptions)]


class CliError(Exception):
    pass


def _read_network(path: str, n: int | None = None) -> ComparatorNetwork:
    if path != "-" and not Path(path).exists() and path in catalog():
        return catalog()[path]
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return parse_network(text, n)


def _emit(args, payload: dict, text: str):
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _word(bits: str, n: int) -> int:
    if len(bits) != n or set(bits) - {"0", "1"}:
        raise CliError(f"expected a {n}-character 0/1 word, got {bits!r}")
    return str_to_word(bits)


# ---------------------------------------------------------------- commands

def cmd_verify(args) -> int:
    net = _read_network(args.path)
    ok = is_sorting_network(net)
    problems = validate_suffix_conditions(net) if ok else []
    head = "sorting network" if ok else "not a sorting network"
    lines = [f"{head}, depth {net.depth}, size {net.size}"] + [f"  {p}" for p in problems]
    _emit(args, {"n": net.n, "depth": net.depth, "size": net.size, "sorting": ok,
                 "suffix_violations": problems}, "\n".join(lines))
    return OK if ok else FALSE


def cmd_eval(args) -> int:
    net = _read_network(args.path)
    out = word_to_str(evaluate(net, _word(args.word, net.n)), net.n)
    _emit(args, {"input": args.word, "output": out}, out)
    return OK


def cmd_trace(args) -> int:
    net = _read_network(args.path)
    steps = [word_to_str(w, net.n) for w in trace(net, _word(args.word, net.n))]
    _emit(args, {"trace": steps}, "\n".join(f"{k:>3} {w}" for k, w in enumerate(steps)))
    return OK


def cmd_outputs(args) -> int:
    net = _read_network(args.path)
    out = outputs(net)
    info = {"outputs": len(out), "sorted": out.sorted_count, "window_sum": window_sum(out)}
    text = f"{info['outputs']} outputs, {info['sorted']} sorted, window sum {info['window_sum']}"
    if args.list:
        info["words"] = [word_to_str(int(w), net.n) for w in out.words]
        text += "\n" + "\n".join(info["words"])
    _emit(args, info, text)
    return OK


def cmd_enumerate(args) -> int:
    if args.kind == "layers":
        count = count_layers(args.n)
        _emit(args, {"n": args.n, "kind": "layers", "count": count}, str(count))
        return OK
    if args.kind == "last-layers":
        rep = enumerate_last_layers(args.n, "nonredundant", args.items)
    elif args.kind == "llnf-last-layers":
        rep = enumerate_last_layers(args.n, "llnf", args.items)
    else:
        rep = enumerate_cosat_suffixes(args.n, args.items)
    payload = rep.to_json()
    text = str(rep.count)
    if args.items:
        fmt = (lambda it: ComparatorNetwork(args.n, tuple(it)).to_text()) if args.kind == "cosat-suffixes" \
            else (lambda it: ComparatorNetwork(args.n, (it,)).to_text())
        payload["items"] = [fmt(it) for it in rep.items]
        text += "\n" + "\n".join(payload["items"])
    _emit(args, payload, text)
    return OK


def cmd_filters(args) -> int:
    if args.load:
        fs = FilterSet.from_jsonl(Path(args.load).read_text(), {"source": args.load})
    else:
        fs = complete_filter_set(args.n, limit=args.limit)
    if args.out:
        Path(args.out).write_text(fs.to_jsonl())
    text = f"{len(fs)} prefixes"
    if args.list:
        text += "\n" + "\n".join(p.to_text() for p in fs.prefixes)
    _emit(args, {"n": fs.n, "count": len(fs), "provenance": fs.provenance,
                 "prefixes": [p.to_text() for p in fs.prefixes]}, text)
    return OK


def cmd_optimize(args) -> int:
    net = _read_network(args.inp)
    cfg = OptimizerConfig(args.pop, args.iters, args.swaps, args.seed)
    res = optimize_prefix(net, cfg)
    if args.out:
        Path(args.out).write_text(res.result.to_text() + "\n")
    if args.perm_out:
        Path(args.perm_out).write_text(json.dumps(res.permutation.to_json()) + "\n")
    before = window_sum(outputs(net))
    _emit(args, dict(res.to_json(), input_fitness=before),
          f"window sum {before} -> {res.fitness}\n{res.result.to_text()}")
    return OK


def _options(args) -> EncodeOptions:
    preset = {"base": EncodeOptions.base(), "default": EncodeOptions(), "all": EncodeOptions.all_on()}[args.preset]
    values = {f: getattr(preset, f) for f in OPTION_NAMES}
    for name in args.enable or []:
        values[_option_name(name)] = True
    for name in args.disable or []:
        values[_option_name(name)] = False
    return EncodeOptions(**values)


def _option_name(name: str) -> str:
    key = name.replace("-", "_")
    if key not in OPTION_NAMES:
        raise CliError(f"unknown encoding option {name!r}; choose from {', '.join(OPTION_NAMES)}")
    return key


def _solver(args) -> SolverConfig:
    kw = {"timeout": args.timeout}
    if args.solver:
        kw["command"] = args.solver
    return SolverConfig(**kw)


def _prefix(args) -> ComparatorNetwork:
    return _read_network(args.prefix, args.n) if args.prefix else ComparatorNetwork(args.n, ())


def cmd_encode(args) -> int:
    prefix = _prefix(args)
    free = args.d - prefix.depth
    if free < 1:
        raise CliError("the prefix leaves no layer to encode")
    inputs = outputs(prefix) if prefix.depth else all_words(args.n)
    meta = {"prefix": prefix.to_text()} if prefix.depth else {}
    inst, reg = encode(args.n, free, inputs, _options(args), meta)
    Path(args.out).write_text(emit_dimacs(inst, reg))
    registry_path = args.registry or args.out + ".registry.json"
    Path(registry_path).write_text(json.dumps(reg.to_json(inst.meta), sort_keys=True) + "\n")
    _emit(args, {"vars": inst.num_vars, "clauses": inst.num_clauses, "cnf": args.out, "registry": registry_path},
          f"{inst.num_vars} variables, {inst.num_clauses} clauses -> {args.out} (registry {registry_path})")
    return OK


def cmd_solve(args) -> int:
    """Run the solver on an existing DIMACS file and decode with its registry."""
    res = solve_file(args.cnf, _solver(args))
    payload = {"verdict": res.verdict, "time": round(res.wall_time, 4)}
    text = res.verdict
    if res.verdict == SAT:
        reg_path = args.registry or args.cnf + ".registry.json"
        reg = registry_from_json(json.loads(Path(reg_path).read_text()))
        net = decode_model(res.model, reg)
        payload["network"] = net.to_text()
        text += "\n" + net.to_text()
    elif res.stderr:
        payload["stderr"] = res.stderr
    _emit(args, payload, text)
    return OK if res.verdict == SAT else FALSE if res.verdict in (UNSAT, TIMEOUT) else ERROR


def cmd_search(args) -> int:
    prefix = _prefix(args)
    att = attempt_extension(prefix, args.n, args.d, _options(args), _solver(args))
    verdict = att.result.verdict
    payload = {"verdict": verdict, "time": round(att.result.wall_time, 4),
               "network": att.network.to_text() if att.network else None}
    text = verdict if att.network is None else f"{verdict}\n{att.network.to_text()}"
    if att.network is not None and args.out:
        Path(args.out).write_text(att.network.to_text() + "\n")
    _emit(args, payload, text)
    return OK if verdict == SAT else FALSE if verdict in (UNSAT, TIMEOUT) else ERROR


def cmd_campaign(args) -> int:
    if args.filters:
        fs = FilterSet.from_jsonl(Path(args.filters).read_text(), {"source": args.filters})
    else:
        fs = complete_filter_set(args.n)
    opt = OptimizerConfig(rng_seed=args.seed) if args.optimize else None
    res = campaign(fs, args.n, args.d, _options(args), _solver(args), args.parallel, args.mode,
                   args.journal, opt)
    if args.out:
        Path(args.out).write_text(json.dumps(res.to_json(), sort_keys=True, indent=1) + "\n")
    text = f"{res.aggregate} (n={res.n}, d={res.d}, {res.stats['completed']}/{res.stats['prefixes']} prefixes)"
    if res.witness:
        text += "\n" + res.witness.to_text()
    _emit(args, res.to_json(), text)
    return res.exit_code


def cmd_render(args) -> int:
    net = _read_network(args.path)
    out = render(net, RenderSpec(args.format, not args.no_separators, args.labels))
    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)
    return OK


def cmd_catalog(args) -> int:
    cat = catalog()
    if args.bounds:
        kb = known_bounds()
        rows = {n: {"depth": list(kb.t(n)), "size": list(kb.s(n))} for n in sorted(kb.depth)}
        text = "\n".join(f"n={n:>2} depth {r['depth'][0]}..{r['depth'][1]} size {r['size'][0]}..{r['size'][1]}"
                         for n, r in rows.items())
        _emit(args, rows, text)
        return OK
    if args.name:
        if args.name not in cat:
            raise CliError(f"no catalog entry {args.name!r}")
        net = cat[args.name]
        _emit(args, net.to_json(), net.to_text())
        return OK
    _emit(args, {name: {"n": net.n, "depth": net.depth, "size": net.size} for name, net in cat.items()},
          "\n".join(f"{name:<12} n={net.n:<3} depth {net.depth:<3} size {net.size}" for name, net in cat.items()))
    return OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("-v", "--verbose", action="store_true")

    enc = argparse.ArgumentParser(add_help=False)
    enc.add_argument("--preset", choices=["base", "default", "all"], default="all")
    enc.add_argument("--enable", action="append", metavar="OPTION")
    enc.add_argument("--disable", action="append", metavar="OPTION")

    solv = argparse.ArgumentParser(add_help=False)
    solv.add_argument("--solver", help="command template with {cnf}; defaults to $SORTNET_SOLVER or the pysat shim")
    solv.add_argument("--timeout", type=float, default=3600.0)

    p = argparse.ArgumentParser(prog="sortnet", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("verify", parents=[common], help="check whether a network sorts")
    s.add_argument("path")
    s.set_defaults(func=cmd_verify)

    for name, func in (("eval", cmd_eval), ("trace", cmd_trace)):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("path")
        s.add_argument("word", help="0/1 string, channel 1 first")
        s.set_defaults(func=func)

    s = sub.add_parser("outputs", parents=[common], help="output set statistics")
    s.add_argument("path")
    s.add_argument("--stats", action="store_true", help="accepted for symmetry; statistics are always shown")
    s.add_argument("--list", action="store_true")
    s.set_defaults(func=cmd_outputs)

    s = sub.add_parser("enumerate", parents=[common])
    s.add_argument("kind", choices=["layers", "last-layers", "llnf-last-layers", "cosat-suffixes"])
    s.add_argument("n", type=int)
    s.add_argument("--items", action="store_true")
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("filters", parents=[common], help="complete two-layer filter set")
    s.add_argument("n", type=int, nargs="?")
    s.add_argument("--limit", type=int, default=11)
    s.add_argument("--out")
    s.add_argument("--load")
    s.add_argument("--list", action="store_true")
    s.set_defaults(func=cmd_filters)

    s = sub.add_parser("optimize-prefix", parents=[common])
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--pop", type=int, default=32)
    s.add_argument("--iters", type=int, default=20)
    s.add_argument("--swaps", type=int, default=1)
    s.add_argument("--out")
    s.add_argument("--perm-out")
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("encode", parents=[common, enc])
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--prefix")
    s.add_argument("--out", required=True)
    s.add_argument("--registry")
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("solve", parents=[common, solv], help="solve a DIMACS file written by encode")
    s.add_argument("cnf")
    s.add_argument("--registry")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("search", parents=[common, enc, solv], help="extend a prefix to a sorting network")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--prefix")
    s.add_argument("--out")
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("campaign", parents=[common, enc, solv])
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--mode", choices=["find", "refute"], default="find")
    s.add_argument("--filters", help="JSONL filter set; generated when omitted")
    s.add_argument("--journal")
    s.add_argument("--parallel", type=int, default=1)
    s.add_argument("--optimize", action="store_true", help="relabel each prefix before encoding")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_campaign)

    s = sub.add_parser("render", parents=[common])
    s.add_argument("path")
    s.add_argument("--format", choices=["text", "svg"], default="text")
    s.add_argument("--no-separators", action="store_true")
    s.add_argument("--labels", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("catalog", parents=[common])
    s.add_argument("name", nargs="?")
    s.add_argument("--bounds", action="store_true")
    s.set_defaults(func=cmd_catalog)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "filters" and args.n is None and not args.load:
        parser.error("filters needs n or --load")
    try:
        return args.func(args)
    except (NetworkError, CliError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
