"""
Command-line entry point for the edit-reward toolkit.

Subcommands: score, bench, diagnose, grid-search, grpo-sim, validate, serve.
Exit codes: 0 success, 1 domain error, 2 usage error. Machine output (JSON or
JSONL) goes to --output or stdout; status lines and tables go to stderr.
"""

import argparse
import contextlib
import json
import os
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO

from pydantic import ValidationError

from langsmith_config import get_langsmith_config, init_tracing
from reward_config import load_aggregation_config, load_backend_spec

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- output helpers

def _dump(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False)


def write_text(text: str, output: Optional[str], stdout: TextIO) -> None:
    if not output:
        stdout.write(text if text.endswith("\n") else text + "\n")
        return
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as file:
        file.write(text if text.endswith("\n") else text + "\n")
    print(f"💾 Written: {path}")


def write_jsonl(records: Sequence[Dict[str, Any]], output: Optional[str], stdout: TextIO) -> None:
    write_text("".join(json.dumps(record, ensure_ascii=False) + "\n" for record in records), output, stdout)


def read_json_or_jsonl(path: str) -> Any:
    """A whole-file JSON document, or one JSON value per line"""
    with open(path, "r", encoding="utf-8") as file:
        text = file.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return [json.loads(line) for line in text.splitlines() if line.strip()]


def _require_input(path: Optional[str], flag: str = "--input") -> str:
    if not path:
        raise UsageError(f"{flag} is required")
    if not os.path.isfile(path):
        raise UsageError(f"{flag} {path} does not exist")
    return path


def _parse_counts(value: str) -> List[int]:
    try:
        counts = [int(part) for part in value.split(",")]
    except ValueError:
        raise UsageError(f"--counts must be three integers like 200,200,200, got {value!r}")
    if len(counts) != 3:
        raise UsageError(f"--counts must list exactly three sizes (2p,3p,4p), got {value!r}")
    return counts


def _aggregation_config(args):
    return load_aggregation_config(args.config, strategy=getattr(args, "strategy", None))


# ---------------------------------------------------------------- subcommands

def cmd_score(args, stdout: TextIO) -> int:
    from reward_workflow import score_batch
    from tool.LLM.batching import plan_batch
    from tool.LLM.schema import RewardRequest, RewardResponse
    from api import error_body

    data = read_json_or_jsonl(_require_input(args.input))
    single = isinstance(data, dict)
    records = [data] if single else list(data)
    if not records:
        raise UsageError(f"{args.input} holds no requests")

    requests = []
    for record in records:
        if args.mode:
            record = {**record, "mode": args.mode}
        requests.append(RewardRequest.model_validate(record))

    backend = load_backend_spec(args.backend, args.endpoint, args.seed)
    cfg = _aggregation_config(args)
    plan = plan_batch(requests)
    print(f"🚀 Scoring {len(requests)} request(s) in {plan.group_count} prefix group(s) with {backend.describe()}")

    started = time.perf_counter()
    results = score_batch(requests, backend, cfg)
    wall_ms = (time.perf_counter() - started) * 1000.0

    bodies = []
    failed = 0
    for req, result in zip(requests, results):
        if isinstance(result, RewardResponse):
            bodies.append(result.to_dict(include_timing=args.timing))
        else:
            failed += 1
            bodies.append(error_body(result, req.request_id)[0])

    completed = len(requests) - failed
    if len(requests) > 1:
        per_image = wall_ms / len(requests)
        print(f"⏱️  Batch latency: {wall_ms:.1f} ms   per image: {per_image:.2f} ms/image   "
              f"throughput: {len(requests) / (wall_ms / 1000.0):.2f} img/s")
        if args.baseline_ms:
            print(f"⚡ Speedup vs baseline {args.baseline_ms:.2f} ms/image: {args.baseline_ms / per_image:.2f}x")
    if failed:
        print(f"⚠️  {failed} of {len(requests)} request(s) failed")

    write_text(_dump(bodies[0] if single else bodies), args.output, stdout)
    return EXIT_OK if completed == len(requests) else EXIT_DOMAIN


def cmd_bench(args, stdout: TextIO) -> int:
    from tool.benchEval.compose import compose_groups, count_by_size, load_sample_pool
    from tool.benchEval.index import evaluate_benchmark, format_report_table, load_benchmark, load_predictions

    if args.compose:
        pool = load_sample_pool(_require_input(args.input))
        counts = _parse_counts(args.counts)
        groups = compose_groups(pool, tuple(counts), args.seed if args.seed is not None else 0)
        print(f"📋 Groups per size: {count_by_size(groups)}")
        write_jsonl([group.to_record() for group in groups], args.output, stdout)
        return EXIT_OK

    groups = load_benchmark(_require_input(args.input))
    scores = load_predictions(_require_input(args.predictions, "--predictions"))
    report = evaluate_benchmark(groups, scores)
    # the table is for humans only and never goes into the report file
    print(format_report_table(report))
    write_text(_dump(report.to_dict()), args.output, stdout)
    return EXIT_OK


def cmd_diagnose(args, stdout: TextIO) -> int:
    from tool.attnDiag.index import diagnose_corpus, load_attention_corpus

    pairs = load_attention_corpus(_require_input(args.input))
    report = diagnose_corpus(pairs)
    print(f"🔍 Diagnosed {report.n} sample pair(s): gap {report.gap.mean:.4f}, "
          f"source entropy {report.source_entropy.mean:.4f}, concentration {report.concentration.mean:.4f}")
    write_text(_dump(report.to_dict()), args.output, stdout)
    return EXIT_OK


def cmd_grid_search(args, stdout: TextIO) -> int:
    from tool.rewardAgg.grid_search import GridSearchSpec, grid_search, load_preference_pairs

    pairs = load_preference_pairs(_require_input(args.input))
    cfg = _aggregation_config(args)
    spec = GridSearchSpec(pairs=tuple(pairs), step=args.step, scale_max=cfg.scale_max)
    result = grid_search(spec)
    write_text(_dump(result.to_dict()), args.output, stdout)
    return EXIT_OK


def cmd_grpo_sim(args, stdout: TextIO) -> int:
    from tool.grpoSignal.index import RL_ADVANTAGE_CLIP, GrpoConfig
    from tool.grpoSignal.simulator import SimSpec, simulate_dynamics
    from tool.rewardAgg.schema import Strategy

    try:
        initial = tuple(float(part) for part in args.initial.split(","))
    except ValueError:
        raise UsageError(f"--initial must be four comma-separated numbers, got {args.initial!r}")

    cfg = _aggregation_config(args)
    grpo = GrpoConfig(
        group_size=args.group_size,
        advantage_clip=RL_ADVANTAGE_CLIP if args.clip else None,
    )
    spec = SimSpec(
        initial_quality=initial,
        sigma=args.sigma,
        eta=args.eta,
        steps=args.steps,
        strategy=Strategy(cfg.strategy),
        seed=args.seed if args.seed is not None else 0,
        grpo=grpo,
        agg=cfg,
    )
    trajectory = simulate_dynamics(spec)
    print(f"📈 Simulated {len(trajectory)} step(s): mean reward "
          f"{trajectory[0].mean_reward:.4f} -> {trajectory[-1].mean_reward:.4f}")
    write_jsonl([point.to_dict() for point in trajectory], args.output, stdout)
    return EXIT_OK


def cmd_validate(args, stdout: TextIO) -> int:
    """
    Strict validation over a transcript corpus. Records are JSONL objects
    {"id", "stream": "sc"|"pq", "raw", "refined"?} or bare transcript strings
    (treated as SC).
    """
    from tool.judgeIO.errors import JudgeOutputError
    from tool.judgeIO.index import parse_pq_output, parse_sc_output
    from tool.judgeIO.schema import ParseOptions

    path = _require_input(args.input)
    counts: Dict[str, int] = {}
    failures: List[Dict[str, Any]] = []
    total = 0

    with open(path, "r", encoding="utf-8") as file:
        for line_number, line in enumerate(file, 1):
            if not line.strip():
                continue
            total += 1
            record = json.loads(line)
            if isinstance(record, str):
                record = {"raw": record}
            record_id = record.get("id", line_number)
            raw = record.get("raw", "")
            try:
                if record.get("stream", "sc") == "pq":
                    parse_pq_output(raw)
                else:
                    parse_sc_output(raw, ParseOptions(refined=bool(record.get("refined", args.refined))))
            except JudgeOutputError as e:
                counts[e.error_code] = counts.get(e.error_code, 0) + 1
                failures.append({"id": record_id, "error_code": e.error_code, "message": e.message})

    invalid = len(failures)
    report = {
        "total": total,
        "valid": total - invalid,
        "invalid": invalid,
        "error_counts": dict(sorted(counts.items())),
        "failures": failures,
    }
    print(f"{'✅' if not invalid else '❌'} {total - invalid}/{total} transcript(s) valid")
    for code, count in report["error_counts"].items():
        print(f"   • {code}: {count}")
    write_text(_dump(report), args.output, stdout)
    return EXIT_OK if not invalid else EXIT_DOMAIN


def cmd_serve(args, stdout: TextIO) -> int:
    from api import serve

    backend = load_backend_spec(args.backend, args.endpoint, args.seed)
    serve(args.bind or os.getenv("REWARD_BIND", ""), backend, _aggregation_config(args), args.baseline_ms)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace, TextIO], int]] = {
    "score": cmd_score,
    "bench": cmd_bench,
    "diagnose": cmd_diagnose,
    "grid-search": cmd_grid_search,
    "grpo-sim": cmd_grpo_sim,
    "validate": cmd_validate,
    "serve": cmd_serve,
}


# ---------------------------------------------------------------- argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edit-reward", description="Reward toolkit for image-editing evaluation")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}")
    sub.required = True

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        command = sub.add_parser(name, help=help_text)
        command.add_argument("--config", help="aggregation config JSON (default: REWARD_CONFIG_PATH or reward_config.json)")
        command.add_argument("--seed", type=int, default=None)
        command.add_argument("--input")
        command.add_argument("--output", help="output file (default: stdout)")
        return command

    def add_backend(command: argparse.ArgumentParser) -> None:
        command.add_argument("--backend", choices=["mock", "remote"], default=None)
        command.add_argument("--endpoint", help="chat-completions URL for --backend remote")
        command.add_argument("--baseline-ms", type=float, default=None, help="baseline ms/image for the speedup figure")

    def add_strategy(command: argparse.ArgumentParser) -> None:
        command.add_argument("--strategy", choices=["weighted_geometric", "bucket_min", "arithmetic_mean"])

    score = add("score", "score a request file (JSON object, list or JSONL)")
    score.add_argument("--mode", choices=["sc", "pq", "full"], help="override every request's mode")
    score.add_argument("--timing", action="store_true", help="include per-stage timings in the output")
    add_backend(score)
    add_strategy(score)

    bench = add("bench", "evaluate predictions on benchmark groups, or compose groups with --compose")
    bench.add_argument("--predictions", help="JSONL of {sample_id, reward}")
    bench.add_argument("--compose", action="store_true", help="compose groups from an annotated sample pool")
    bench.add_argument("--counts", default="200,200,200", help="2p,3p,4p group counts for --compose")

    add("diagnose", "attention diagnostics over a corpus of sample pairs")

    grid = add("grid-search", "calibrate alpha and w_con on preference pairs")
    grid.add_argument("--step", type=float, default=0.05)

    sim = add("grpo-sim", "simulate group-relative optimisation on synthetic quality")
    sim.add_argument("--steps", type=int, default=500)
    sim.add_argument("--sigma", type=float, default=1.0)
    sim.add_argument("--eta", type=float, default=0.5)
    sim.add_argument("--initial", default="12,12,12,12", help="s_if,s_con,s_nat,s_art start point")
    sim.add_argument("--group-size", type=int, default=12)
    sim.add_argument("--clip", action="store_true", help="clip advantages to the RL preset range")
    add_strategy(sim)

    validate = add("validate", "strict validation of a judge transcript corpus")
    validate.add_argument("--refined", action="store_true", help="also enforce the refined-reasoning rules")

    serve = add("serve", "start the HTTP reward service")
    serve.add_argument("--bind", help="host:port (default: REWARD_BIND or 127.0.0.1:5000)")
    add_backend(serve)
    add_strategy(serve)

    return parser


def run(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None) -> int:
    """Parse argv, dispatch one subcommand and map failures onto exit codes"""
    if stdout is None:
        stdout = sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse already printed the synopsis to stderr
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    try:
        # library status lines must not mix with machine output on stdout
        with contextlib.redirect_stdout(sys.stderr):
            return COMMANDS[args.command](args, stdout)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ValidationError, OSError) as e:
        code = getattr(e, "error_code", type(e).__name__)
        print(f"❌ {code}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except Exception as e:
        code = getattr(e, "error_code", "InternalError")
        print(f"❌ {code}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except KeyboardInterrupt:
        print("\n⏹️  Interrupted by user", file=sys.stderr)
        return EXIT_DOMAIN


def main() -> int:
    init_tracing()
    config = get_langsmith_config()
    if config["tracing_enabled"]:
        print(f"📊 LangSmith project: {config['project']}", file=sys.stderr)
    return run()


if __name__ == "__main__":
    sys.exit(main())
