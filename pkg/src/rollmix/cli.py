"""Command-line front end.

Subcommands::

    gen    environment config -> population file
    mix    population + steps + schemata -> running-frequency report
    limit  population + schemata -> closed-form frequency report
    orbit  population + schemata -> exact orbit report (cap-guarded)
    eval   population + payoffs + walk count -> action-value report
    verify run the full invariant suite; nonzero exit on any failure

Exit codes: 0 success, 1 usage or schema-syntax error, 2 invalid input
data (with the violation list), 3 cap exceeded, 4 verification failure.

Randomised commands require --seed and are bit-reproducible given it;
report files are canonical JSON (wall-clock timing goes to stderr so
identical inputs produce identical bytes).
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import tempfile
import time
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from . import digraph as dg
from .envsim import (
    InvalidConfig,
    SimConfig,
    generate_population,
    make_random_pomdp,
    sim_config_from_json,
)
from .fileio import (
    ParseError,
    SchemaSyntaxError,
    dump_canonical,
    format_rational,
    format_schema,
    load_population,
    parse_schema,
    population_to_json,
    read_schemata_file,
)
from .model import InvalidPopulationError, Schema
from .recombine import OrbitCapExceeded, TransformDistribution, enumerate_orbit, orbit_frequency, run_chain
from .stats import DownReport, down_report, limiting_frequency_from_report


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="rollmix", description=__doc__, add_help=True,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"rollmix {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="simulate a population from an environment config")
    gen.add_argument("--env", required=True, help="environment config JSON")
    gen.add_argument("--seed", required=True, type=int, help="rollout simulation seed")
    gen.add_argument("--out", help="population file (default: stdout)")

    mix = sub.add_parser("mix", help="run the recombination chain and report running frequencies")
    mix.add_argument("--pop", required=True)
    mix.add_argument("--steps", required=True, type=int)
    mix.add_argument("--schema", action="append", default=[], help="schema text (repeatable)")
    mix.add_argument("--schemata-file", help="file with one schema per line")
    mix.add_argument("--seed", required=True, type=int)
    mix.add_argument("--identity-prob", type=float, default=0.01)
    mix.add_argument("--out")

    limit = sub.add_parser("limit", help="closed-form limiting frequencies")
    limit.add_argument("--pop", required=True)
    limit.add_argument("--schema", action="append", default=[])
    limit.add_argument("--schemata-file")
    limit.add_argument("--out")

    orbit = sub.add_parser("orbit", help="exact orbit enumeration and frequencies")
    orbit.add_argument("--pop", required=True)
    orbit.add_argument("--schema", action="append", default=[])
    orbit.add_argument("--schemata-file")
    orbit.add_argument("--cap", type=int, default=10**6, help="maximum orbit size")
    orbit.add_argument("--out")

    ev = sub.add_parser("eval", help="walker-based action evaluation with exact oracle column")
    ev.add_argument("--pop", required=True)
    ev.add_argument("--walks", required=True, type=int)
    ev.add_argument("--seed", required=True, type=int)
    ev.add_argument("--cap", type=int, default=10**6, help="per-walk step cap")
    ev.add_argument("--workers", type=int, default=1)
    ev.add_argument("--out")

    ver = sub.add_parser("verify", help="run the full invariant and acceptance suite")
    ver.add_argument("--seed", required=True, type=int)
    ver.add_argument("--out")
    return parser


def _schemata_from_args(args: argparse.Namespace) -> list[Schema]:
    schemata = [parse_schema(text) for text in args.schema]
    if getattr(args, "schemata_file", None):
        schemata.extend(read_schemata_file(args.schemata_file))
    if not schemata:
        raise UsageError("no schemata given; use --schema or --schemata-file")
    return schemata


def _emit(report: dict[str, Any], out: str | None) -> None:
    text = dump_canonical(report)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _report(command: str, inputs: dict[str, Any], outputs: dict[str, Any]) -> dict[str, Any]:
    return {
        "command": command,
        "tool": {"name": "rollmix", "version": __version__},
        "inputs": inputs,
        "outputs": outputs,
    }


def _load_sim_config(path: str) -> SimConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    try:
        return sim_config_from_json(data)
    except KeyError as exc:
        raise ParseError(f"{path}: missing config field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from None


def _down_report_json(report: DownReport) -> dict[str, Any]:
    return {
        "b": report.b,
        "actions": {
            action: {
                "classes": {
                    str(j): report.action_order[(a, j)]
                    for (a, j) in sorted(report.action_order)
                    if a == action
                },
                "terminals": sorted(report.action_terminals.get(action, frozenset())),
            }
            for action in sorted(
                set(report.action_classes) | set(report.action_terminals)
            )
        },
        "classes": {
            str(i): {
                "classes": {
                    str(j): report.order[(i2, j)]
                    for (i2, j) in sorted(report.order)
                    if i2 == i
                },
                "terminals": sorted(report.class_terminals.get(i, frozenset())),
                "terminal_count": report.terminal_count(i),
                "occurrences": report.occ(i),
            }
            for i in sorted(report.occurrences)
        },
    }


def _cmd_gen(args: argparse.Namespace) -> int:
    cfg = _load_sim_config(args.env)
    env = make_random_pomdp(cfg, random.Random(cfg.seed))
    actions = [env.root_actions[i % len(env.root_actions)] for i in range(cfg.rollouts)]
    sample = generate_population(env, actions, random.Random(args.seed))
    _emit(population_to_json(sample.population, sample.payoffs), args.out)
    if sample.cap_hits:
        print(f"[rollmix] gen: {sample.cap_hits} rollouts hit the depth cap", file=sys.stderr)
    return 0


def _cmd_mix(args: argparse.Namespace) -> int:
    population, _ = load_population(args.pop)
    schemata = _schemata_from_args(args)
    mu = TransformDistribution.from_population(population, args.identity_prob)
    trace = run_chain(population, args.steps, mu, schemata, args.seed)
    outputs = {
        "b": population.b,
        "steps": args.steps,
        "schemata": {
            format_schema(h): {
                "total_count": trace.schema_counts[h],
                "denominator": population.b * (args.steps + 1),
                "phi": f"{float(trace.phi(h)):.12g}",
            }
            for h in schemata
        },
    }
    inputs = {
        "pop": args.pop,
        "steps": args.steps,
        "seed": args.seed,
        "identity_prob": args.identity_prob,
    }
    _emit(_report("mix", inputs, outputs), args.out)
    return 0


def _cmd_limit(args: argparse.Namespace) -> int:
    population, _ = load_population(args.pop)
    schemata = _schemata_from_args(args)
    report = down_report(population)
    outputs = {
        "frequencies": {
            format_schema(h): format_rational(limiting_frequency_from_report(report, h))
            for h in schemata
        },
        "down_report": _down_report_json(report),
    }
    _emit(_report("limit", {"pop": args.pop}, outputs), args.out)
    return 0


def _cmd_orbit(args: argparse.Namespace) -> int:
    population, _ = load_population(args.pop)
    schemata = _schemata_from_args(args)
    orbit = enumerate_orbit(population, cap=args.cap)
    outputs = {
        "orbit_size": orbit.size,
        "canonical_classes": len(orbit.shapes),
        "fiber": orbit.fiber,
        "frequencies": {
            format_schema(h): format_rational(orbit_frequency(orbit, h)) for h in schemata
        },
    }
    _emit(_report("orbit", {"pop": args.pop, "cap": args.cap}, outputs), args.out)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    if args.walks < 0:
        raise UsageError("--walks must be >= 0")
    population, payoffs = load_population(args.pop)
    graph = dg.build_digraph(population)
    missing = graph.terminals - set(payoffs)
    if missing:
        raise ParseError(f"{args.pop}: payoffs missing for terminals {sorted(missing)}")
    actions = sorted({r.action for r in population.rollouts})
    report = dg.evaluate_actions(
        graph, actions, args.walks, payoffs, cap=args.cap, seed=args.seed, workers=args.workers
    )
    outputs: dict[str, Any] = {"walks": args.walks, "actions": {}}
    for action in actions:
        oracle = dg.exact_expected_payoff(graph, action, payoffs)
        entry: dict[str, Any] = {"oracle": format_rational(oracle)}
        if action in report.per_action:
            ev = report.per_action[action]
            entry.update(
                {
                    "q": f"{float(ev.mean):.12g}" if ev.n else None,
                    "n": ev.n,
                    "payoff_sum": format_rational(ev.payoff_sum),
                    "stddev": f"{ev.stddev:.12g}",
                    "cap_exceeded": ev.cap_exceeded,
                }
            )
        else:
            entry.update(
                {"q": None, "n": 0, "payoff_sum": "0", "stddev": "0", "cap_exceeded": 0}
            )
        outputs["actions"][action] = entry
    inputs = {
        "pop": args.pop,
        "walks": args.walks,
        "seed": args.seed,
        "cap": args.cap,
        "workers": args.workers,
    }
    _emit(_report("eval", inputs, outputs), args.out)
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    from .verify import run_verification

    with tempfile.TemporaryDirectory(prefix="rollmix-verify-") as workdir:
        results = run_verification(args.seed, workdir)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name} ({r.seconds:.1f}s): {r.detail}")
    if args.out:
        _emit(
            _report(
                "verify",
                {"seed": args.seed},
                {
                    "results": [
                        {"name": r.name, "passed": r.passed, "detail": r.detail}
                        for r in results
                    ]
                },
            ),
            args.out,
        )
    return 4 if failed else 0


_HANDLERS = {
    "gen": _cmd_gen,
    "mix": _cmd_mix,
    "limit": _cmd_limit,
    "orbit": _cmd_orbit,
    "eval": _cmd_eval,
    "verify": _cmd_verify,
}


def dispatch(argv: Sequence[str]) -> int:
    """Run one command; returns the exit code instead of raising SystemExit."""
    parser = _build_parser()
    started = time.perf_counter()
    try:
        args = parser.parse_args(list(argv))
        code = _HANDLERS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"rollmix: usage error: {exc}", file=sys.stderr)
        return 1
    except SchemaSyntaxError as exc:
        print(f"rollmix: schema syntax error: {exc}", file=sys.stderr)
        return 1
    except InvalidPopulationError as exc:
        print("rollmix: invalid population:", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v.kind}: {v.detail}", file=sys.stderr)
        return 2
    except (ParseError, InvalidConfig, dg.NoData, dg.Unsolvable) as exc:
        print(f"rollmix: invalid input: {exc}", file=sys.stderr)
        return 2
    except (OrbitCapExceeded, dg.CapExceeded) as exc:
        print(f"rollmix: cap exceeded: {exc}", file=sys.stderr)
        return 3
    except SystemExit as exc:  # argparse --help/--version
        return int(exc.code or 0)
    else:
        elapsed = time.perf_counter() - started
        print(f"[rollmix] {args.command} finished in {elapsed:.3f}s", file=sys.stderr)
        return code


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
