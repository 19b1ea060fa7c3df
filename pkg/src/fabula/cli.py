"""Command-line driver.

Subcommands::

    fabula compile  INPUT [PROBLEM]        narrative PDDL -> classical PDDL
    fabula solve    INPUT [PROBLEM]        compile, ground, prune, search, analyse
    fabula validate PLAN INPUT [PROBLEM]   plan JSON -> classical + intentionality verdicts
    fabula render   PLAN INPUT [PROBLEM]   plan JSON -> Graphviz DOT
    fabula demo     [aladdin|micro]        end-to-end run on a bundled scenario

INPUT is a file holding the domain (and usually the problem) or the name of
a bundled fixture (``aladdin``, ``aladdin-large``, ``thief``).

Exit status: 0 success, 1 unsolvable or resource limit (search cap,
grounding memory budget), 2 invalid plan,
3 input error.  Diagnostics and per-phase timings go to standard error.
"""

from __future__ import annotations

import argparse
import re
import sys
import time
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .analysis import (
    AnalysisError,
    FabulaPlan,
    check_toggling,
    extract_frames,
    lift_to_fabula,
    story_label,
    validate_fabula_classical,
    validate_intentional,
)
from .ground import DEFAULT_MEM_LIMIT, GroundingError, Unsolvable
from .justify import CompileError, CompileOptions, build_compiled_task, toggled_domain
from .metaplan import DEFAULT_DEPTH, MetaError, build_meta_task
from .micro import random_micro
from .model import Atom, ModelError, pos
from .pddl import GROUND_STRIPS, LIFTED_ADL, ParseError, WellFormednessError, emit_classical_pddl, load_narrative
from .render import PlanFormatError, emit_dot, plan_from_json, plan_to_json
from .search import SearchLimit, astar, enumerate_optimal, gbfs

EXIT_OK, EXIT_UNSOLVABLE, EXIT_INVALID, EXIT_INPUT = 0, 1, 2, 3
FIXTURES = ("aladdin", "aladdin-large", "thief")
JUSTIFY, META = "justify", "meta"
ALL_OPTIMAL_CAP = 100_000


class InputError(Exception):
    pass


class NoSolution(Exception):
    pass


INPUT_ERRORS = (
    InputError,
    ParseError,
    WellFormednessError,
    CompileError,
    MetaError,
    ModelError,
    PlanFormatError,
    AnalysisError,
    OSError,
)


# ── argument handling ────────────────────────────────────────────────────────

_SIZE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([kKmMgGtT]?)[bB]?\s*$")


def parse_size(text: str) -> int:
    """``"2G"`` -> 2147483648; plain numbers are bytes."""
    m = _SIZE.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"invalid size {text!r} (use e.g. 512M or 2G)")
    scale = {"": 1, "k": 1024, "m": 1024**2, "g": 1024**3, "t": 1024**4}[m.group(2).lower()]
    return int(float(m.group(1)) * scale)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--method", choices=(JUSTIFY, META), default=JUSTIFY, help="compilation (default: justify)")
    common.add_argument("--depth", type=_positive_int, default=DEFAULT_DEPTH, help=f"meta-planning depth bound (default: {DEFAULT_DEPTH})")
    common.add_argument("--secondary-delegation", action="store_true", help="allow characters to delegate their own goals (justify only)")
    common.add_argument("--make-toggling", action="store_true", help="split non-toggling actions into toggling variants first")
    common.add_argument("--mem-limit", type=parse_size, default=DEFAULT_MEM_LIMIT, help="grounding memory budget, e.g. 2G (default: 2G)")
    common.add_argument("--out", type=Path, default=None, help="output directory (default: standard output)")

    p = argparse.ArgumentParser(prog="fabula", description="Narrative planning by compilation to classical planning.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    c = sub.add_parser("compile", parents=[common], help="write the compiled classical PDDL")
    c.add_argument("inputs", nargs="+", metavar="INPUT")
    c.add_argument("--emit", choices=(LIFTED_ADL, GROUND_STRIPS), default=LIFTED_ADL, help="output form (default: lifted-adl)")

    s = sub.add_parser("solve", parents=[common], help="find a story plan")
    s.add_argument("inputs", nargs="+", metavar="INPUT")
    s.add_argument("--all-optimal", action="store_true", help="enumerate every optimal plan and report the story variations")

    v = sub.add_parser("validate", parents=[common], help="check a plan JSON file")
    v.add_argument("plan", type=Path)
    v.add_argument("inputs", nargs="+", metavar="INPUT")

    r = sub.add_parser("render", parents=[common], help="render a plan JSON file as DOT")
    r.add_argument("plan", type=Path)
    r.add_argument("inputs", nargs="+", metavar="INPUT")

    d = sub.add_parser("demo", parents=[common], help="run a bundled scenario end to end")
    d.add_argument("scenario", nargs="?", choices=("aladdin", "micro"), default="aladdin")
    d.add_argument("--seed", type=int, default=0, help="micro-domain seed (default: 0)")
    return p


# ── helpers ──────────────────────────────────────────────────────────────────


def fixture_text(name: str) -> str:
    return resources.files("fabula").joinpath("fixtures", f"{name}.fpddl").read_text()


def read_inputs(inputs: Sequence[str]):
    if len(inputs) > 2:
        raise InputError("expected a domain file and at most one problem file")
    texts = []
    for item in inputs:
        path = Path(item)
        if path.exists():
            texts.append(path.read_text())
        elif item in FIXTURES:
            texts.append(fixture_text(item))
        else:
            raise InputError(f"{item}: no such file or bundled fixture")
    return load_narrative(*texts)


class Timer:
    def __init__(self, stream):
        self.stream = stream
        self.phases: list[tuple[str, float]] = []

    def add(self, phase: str, seconds: float):
        self.phases.append((phase, seconds))
        print(f"[time] {phase:<8} {seconds:8.3f} s", file=self.stream)


def death_excusal(domain) -> list:
    """Death excuses a character from its intentions when the domain has a
    unary ``dead`` predicate."""
    if domain.arities.get("dead") == 1:
        return [pos(Atom("dead", ("?c",)))]
    return []


def prepare(args, domain, problem, timer: Timer, ground: bool = True):
    if args.make_toggling:
        domain = toggled_domain(domain)
    report = check_toggling(domain)
    if not report.all_toggling and args.method == JUSTIFY:
        names = sorted({e.action for e in report.unknown()})
        print(f"warning: not every action is toggling ({', '.join(names)}); intentionality is not guaranteed", file=timer.stream)
    if args.method == META:
        if args.secondary_delegation:
            raise InputError("--secondary-delegation applies to --method justify only")
        ct = build_meta_task(domain, problem, args.depth, death_excusal(domain), ground=ground, mem_limit=args.mem_limit)
    else:
        opts = CompileOptions(secondary_delegation=args.secondary_delegation)
        ct = build_compiled_task(domain, problem, opts, ground=ground, mem_limit=args.mem_limit)
    for phase in ("compile", "ground", "prune"):
        if phase in ct.stats.get("seconds", {}):
            timer.add(phase, ct.stats["seconds"][phase])
    return domain, ct


def write_out(args, name: str, text: str, out) -> None:
    if args.out is None:
        out.write(text)
    else:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / name).write_text(text)


def format_story(fp: FabulaPlan) -> str:
    lines = []
    for s in fp.steps:
        who = ", ".join(f"{r.actor} intends {r.intention}" for r in s.roles) or "happening"
        lines.append(f"{s.index:3d}. {s}    [{who}]")
    return "\n".join(lines)


def verdict_lines(fp: FabulaPlan) -> tuple[bool, bool, list[str]]:
    cv = validate_fabula_classical(fp)
    iv = validate_intentional(fp)
    lines = []
    if not cv.ok:
        lines.append(f"classically INVALID: {cv.reason}")
    for v in iv.violations:
        lines.append(f"NOT intentional, {v}")
    return cv.ok, iv.valid, lines


def summary(classical: bool, intentional: bool) -> str:
    if classical and intentional:
        return "valid & intentional"
    if classical:
        return "valid, NOT intentional"
    return "INVALID"


# ── subcommands ──────────────────────────────────────────────────────────────


def cmd_compile(args, out, err) -> int:
    domain, problem = read_inputs(args.inputs)
    timer = Timer(err)
    domain, ct = prepare(args, domain, problem, timer, ground=args.emit == GROUND_STRIPS)
    t0 = time.perf_counter()
    text = emit_classical_pddl(ct.task, args.emit, ground=ct.ground)
    timer.add("emit", time.perf_counter() - t0)
    write_out(args, "domain.pddl", text.domain, out)
    if args.out is None:
        out.write("\n")
    write_out(args, "problem.pddl", text.problem, out)
    return EXIT_OK


def _solve_task(args, ct, timer: Timer):
    t0 = time.perf_counter()
    if args.method == META and not getattr(args, "all_optimal", False):
        res = gbfs(ct.ground)
    else:
        res = astar(ct.ground)
    timer.add("search", time.perf_counter() - t0)
    if not res.solved:
        raise NoSolution(f"no plan found ({res.status})")
    return res


def _analyse(ct, plan, domain, problem) -> FabulaPlan:
    return extract_frames(lift_to_fabula(ct.ground, plan, ct.metadata, domain, problem))


def cmd_solve(args, out, err) -> int:
    domain, problem = read_inputs(args.inputs)
    timer = Timer(err)
    domain, ct = prepare(args, domain, problem, timer)
    res = _solve_task(args, ct, timer)
    if not args.all_optimal:
        t0 = time.perf_counter()
        fp = _analyse(ct, res.plan, domain, problem)
        classical, intentional, lines = verdict_lines(fp)
        timer.add("analyze", time.perf_counter() - t0)
        print(f"plan with {len(fp.steps)} story steps (classical cost {res.cost})", file=out)
        print(format_story(fp), file=out)
        for line in lines:
            print(line, file=out)
        print(summary(classical, intentional), file=out)
        if args.out is not None:
            write_out(args, "plan.json", plan_to_json(fp), out)
        return EXIT_OK

    t0 = time.perf_counter()
    enum = enumerate_optimal(ct.ground, res.cost, cap=ALL_OPTIMAL_CAP)
    timer.add("enumerate", time.perf_counter() - t0)
    if enum.truncated:
        raise NoSolution(f"more than {ALL_OPTIMAL_CAP} optimal plans")
    t0 = time.perf_counter()
    label = story_label(ct.ground, ct.metadata, domain)
    seen: dict[tuple, list[int]] = {}
    for plan in enum.plans:
        key = tuple(sorted((x for x in map(label, plan) if x is not None), key=repr))
        seen.setdefault(key, plan)
    variations = [seen[k] for k in sorted(seen, key=repr)]
    all_ok = True
    print(f"{len(enum.plans)} optimal plans of cost {enum.cost}, {len(variations)} fabula variations", file=out)
    for n, plan in enumerate(variations, 1):
        fp = _analyse(ct, plan, domain, problem)
        classical, intentional, lines = verdict_lines(fp)
        all_ok &= classical
        print(f"\nvariation {n}:", file=out)
        print(format_story(fp), file=out)
        for line in lines:
            print(line, file=out)
        print(summary(classical, intentional), file=out)
        if args.out is not None:
            write_out(args, f"plan-{n}.json", plan_to_json(fp), out)
    timer.add("analyze", time.perf_counter() - t0)
    return EXIT_OK


def cmd_validate(args, out, err) -> int:
    domain, problem = read_inputs(args.inputs)
    fp = plan_from_json(args.plan.read_text(), domain, problem)
    if not fp.frames:
        fp = extract_frames(fp)
    classical, intentional, lines = verdict_lines(fp)
    for line in lines:
        print(line, file=out)
    print(summary(classical, intentional), file=out)
    return EXIT_OK if classical and intentional else EXIT_INVALID


def cmd_render(args, out, err) -> int:
    domain, problem = read_inputs(args.inputs)
    fp = plan_from_json(args.plan.read_text(), domain, problem)
    write_out(args, args.plan.stem + ".dot", emit_dot(fp), out)
    return EXIT_OK


def cmd_demo(args, out, err) -> int:
    timer = Timer(err)
    if args.scenario == "micro":
        micro = random_micro(args.seed)
        domain, problem = load_narrative(micro.text)
        print(f"micro domain, seed {args.seed}", file=out)
        if args.out is not None:
            write_out(args, f"micro-{args.seed}.fpddl", micro.text, out)
    else:
        domain, problem = load_narrative(fixture_text("aladdin"))
    domain, ct = prepare(args, domain, problem, timer)
    res = _solve_task(args, ct, timer)
    t0 = time.perf_counter()
    fp = _analyse(ct, res.plan, domain, problem)
    classical, intentional, lines = verdict_lines(fp)
    timer.add("analyze", time.perf_counter() - t0)
    print(format_story(fp), file=out)
    print("outcome: " + " ".join(str(g) for g in problem.outcome), file=out)
    for line in lines:
        print(line, file=out)
    print(summary(classical, intentional), file=out)
    if args.out is not None:
        write_out(args, "plan.json", plan_to_json(fp), out)
    total = sum(s for _, s in timer.phases)
    print(f"[time] total    {total:8.3f} s", file=err)
    return EXIT_OK


COMMANDS = {
    "compile": cmd_compile,
    "solve": cmd_solve,
    "validate": cmd_validate,
    "render": cmd_render,
    "demo": cmd_demo,
}


def run(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    try:
        return COMMANDS[args.command](args, out, err)
    except (NoSolution, Unsolvable, SearchLimit, GroundingError) as e:
        print(f"unsolvable: {e}", file=err)
        return EXIT_UNSOLVABLE
    except MemoryError:
        print("unsolvable: out of memory", file=err)
        return EXIT_UNSOLVABLE
    except INPUT_ERRORS as e:
        print(f"error: {e}", file=err)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
