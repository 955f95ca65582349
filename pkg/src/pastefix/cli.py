"""Command-line pipeline: mine, curate, eval, serve, replay.

Every command reads and writes the newline-delimited record formats used
across the toolkit. Usage errors exit 2 (argparse), data errors exit 1.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from collections import Counter
from pathlib import Path

from . import curation, metrics, miner
from .engine import BackendUnavailable, MalformedResponse, SuggestionEngine
from .journal import read_journeys
from .miner import MinerConfig, PasteFixExample, read_examples, write_examples
from .service import ServiceConfig, serve_forever


def _read_lines(path: str) -> list[str]:
    if path == "-":
        return sys.stdin.read().splitlines()
    return Path(path).read_text(encoding="utf-8").splitlines()


def _write_lines(path: str, lines: list[str]) -> None:
    text = "".join(line + "\n" for line in lines)
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _cmd_mine(args: argparse.Namespace) -> int:
    journeys, skipped = read_journeys(_read_lines(args.journeys))
    config = MinerConfig(
        min_candidate_chars=args.min_chars,
        max_candidate_lines=args.max_lines,
        idle_cutoff_ms=args.idle_cutoff_ms,
        provenance=args.provenance,
    )
    examples, stats = miner.mine(journeys, config)
    out = list(write_examples(examples))
    summary = {
        "kind": "mining_stats",
        "journeys": stats.journeys,
        "candidates": stats.candidates,
        "edit_examples": stats.edit_examples,
        "no_edit_examples": stats.no_edit_examples,
        "discarded": stats.discarded,
        "journey_errors": stats.journey_errors,
        "skipped_input_lines": skipped,
    }
    out.append(json.dumps(summary))
    _write_lines(args.out, out)
    print(f"mine: {stats.summary()} skipped_lines={skipped}", file=sys.stderr)
    return 0


def _load_policy(path: str | None) -> curation.CurationPolicy:
    if not path:
        return curation.CurationPolicy()
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return curation.CurationPolicy(
        max_paste_lines=int(obj.get("max_paste_lines", 20)),
        max_example_chars=int(obj.get("max_example_chars", 50_000)),
        max_age_days=int(obj.get("max_age_days", 120)),
        allowed_provenance=frozenset(obj.get("allowed_provenance", ["Internal"])),
    )


def _cmd_curate(args: argparse.Namespace) -> int:
    examples, skipped = read_examples(_read_lines(args.examples))
    if not examples and skipped:
        print("curate: no parseable examples", file=sys.stderr)
        return 1
    now = args.now if args.now is not None else int(time.time() * 1000)
    kept, rejections = curation.curate(examples, _load_policy(args.policy), now)

    out = list(write_examples(kept))
    summary = {
        "kind": "curation_stats",
        "input": len(examples),
        "kept": len(kept),
        "rejections": dict(rejections),
        "skipped_input_lines": skipped,
    }

    if args.batch_size:
        if args.frequencies:
            freqs = json.loads(Path(args.frequencies).read_text(encoding="utf-8"))
        else:
            freqs = Counter(e.language for e in kept)
        weights = curation.weight_languages((e.language for e in kept), freqs)
        batches = curation.build_batches(
            kept, args.batch_size, args.no_edit_fraction, weights, args.seed
        )
        batch_lines = [
            json.dumps(
                {
                    "batch_index": i,
                    "size": batch.size,
                    "no_edit_shortfall": batch.no_edit_shortfall,
                    "edit_shortfall": batch.edit_shortfall,
                    "examples": [miner.example_to_record(e) for e in batch.examples],
                }
            )
            for i, batch in enumerate(batches)
        ]
        _write_lines(args.batches_out, batch_lines)
        summary["batches"] = len(batches)

    if args.validation_fraction is not None:
        train, validation = curation.split_by_file_path(
            kept, args.validation_fraction, args.seed
        )
        _write_lines(args.train_out, list(write_examples(train)))
        _write_lines(args.validation_out, list(write_examples(validation)))
        summary["train"] = len(train)
        summary["validation"] = len(validation)

    out.append(json.dumps(summary))
    _write_lines(args.out, out)
    print(
        f"curate: kept={len(kept)}/{len(examples)} rejections={dict(rejections)}",
        file=sys.stderr,
    )
    return 0


def _predict_example(example: PasteFixExample, engine: SuggestionEngine) -> metrics.EvalRecord:
    region_lines = example.file_after_paste.split("\n")[
        example.region.start_line : example.region.end_line + 1
    ]
    suggestion = engine.suggest(
        example.file_after_paste, example.region, example.language, example.file_path
    )
    predicted = (
        list(suggestion.preview_region_lines) if suggestion is not None else region_lines
    )
    return metrics.EvalRecord(
        example_id=f"{example.journey_id}:{example.region.start_line}",
        language=example.language,
        predicted_region=tuple(predicted),
        ground_truth_region=tuple(example.fixed_region_text.split("\n")),
        ground_truth_label=example.label,
        predicted_nonempty=suggestion is not None,
    )


def _cmd_eval(args: argparse.Namespace) -> int:
    examples, skipped = read_examples(_read_lines(args.examples))
    if not examples:
        print(f"eval: no examples (skipped {skipped} lines)", file=sys.stderr)
        return 1
    config = ServiceConfig.from_file(Path(args.backend_config))
    engine = SuggestionEngine(config.backend, config.engine)
    records = [_predict_example(example, engine) for example in examples]
    if args.records_out:
        _write_lines(
            args.records_out,
            [json.dumps(metrics.eval_record_to_record(r)) for r in records],
        )
    report = metrics.offline_report(records)
    print(metrics.format_offline_report(report))
    if args.json_out:
        payload = {
            "overall": report.overall.__dict__,
            "languages": [row.__dict__ for row in report.languages],
        }
        Path(args.json_out).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    config = ServiceConfig.from_file(Path(args.config))
    print(f"serving on http://{args.host}:{args.port}", file=sys.stderr)
    serve_forever(config, args.host, args.port)
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    events, skipped = metrics.read_events(_read_lines(args.telemetry))
    if not events:
        print(f"replay: no events (skipped {skipped} lines)", file=sys.stderr)
        return 1
    report = metrics.online_report(events)
    print(f"shown={report.shown} accepted={report.accepted} dismissed={report.dismissed}")
    print(f"acceptance_rate={report.acceptance_rate:.3f}")
    if report.avg_chars_modified is not None:
        print(f"avg_chars_modified={report.avg_chars_modified:.2f}")
    if report.avg_chars_added is not None:
        print(f"avg_chars_added={report.avg_chars_added:.2f}")
    if report.mean_survival is not None:
        print(f"mean_survival={report.mean_survival:.3f}")
    if report.median_latency_ms is not None:
        print(f"median_latency_ms={report.median_latency_ms:.1f}")
    if report.throughput_qps is not None:
        print(f"throughput_qps={report.throughput_qps:.2f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pastefix", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    mine = sub.add_parser("mine", help="mine paste-fix examples from edit journals")
    mine.add_argument("--journeys", required=True, help="newline-delimited snapshot/delta records ('-' for stdin)")
    mine.add_argument("--out", default="-", help="examples output path ('-' for stdout)")
    mine.add_argument("--min-chars", type=int, default=10)
    mine.add_argument("--max-lines", type=int, default=5)
    mine.add_argument("--idle-cutoff-ms", type=int, default=None)
    mine.add_argument("--provenance", default=miner.PROVENANCE_INTERNAL)
    mine.set_defaults(func=_cmd_mine)

    cur = sub.add_parser("curate", help="filter and batch mined examples")
    cur.add_argument("--examples", required=True)
    cur.add_argument("--out", default="-")
    cur.add_argument("--policy", help="JSON policy file")
    cur.add_argument("--now", type=int, default=None, help="reference time in ms (default: wall clock)")
    cur.add_argument("--batch-size", type=int, default=None)
    cur.add_argument("--no-edit-fraction", type=float, default=0.3)
    cur.add_argument("--seed", type=int, default=0)
    cur.add_argument("--frequencies", help="JSON language->frequency map")
    cur.add_argument("--batches-out", default="batches.ndjson")
    cur.add_argument("--validation-fraction", type=float, default=None,
                     help="also emit a file-path-disjoint train/validation split")
    cur.add_argument("--train-out", default="train.ndjson")
    cur.add_argument("--validation-out", default="validation.ndjson")
    cur.set_defaults(func=_cmd_curate)

    ev = sub.add_parser("eval", help="grade a backend against labeled examples")
    ev.add_argument("--examples", required=True)
    ev.add_argument("--backend-config", required=True, help="service config JSON selecting the backend")
    ev.add_argument("--json-out", help="also write the report as JSON")
    ev.add_argument("--records-out", help="also write per-example prediction records")
    ev.set_defaults(func=_cmd_eval)

    srv = sub.add_parser("serve", help="start the suggestion service")
    srv.add_argument("--config", required=True)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8123)
    srv.set_defaults(func=_cmd_serve)

    rep = sub.add_parser("replay", help="compute online metrics from a telemetry log")
    rep.add_argument("--telemetry", required=True)
    rep.set_defaults(func=_cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, BackendUnavailable, MalformedResponse) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
