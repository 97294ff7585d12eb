"""
Command-line entry point.

    cfgevade gen-corpus --benign 100 --malicious 100 --seed 7 --out corpus/
    cfgevade build-vocab --corpus corpus/ --out vocab.txt
    cfgevade train --corpus corpus/ --vocab vocab.txt --out model.bin
    cfgevade eval --corpus corpus/ --vocab vocab.txt --weights model.bin --split test
    cfgevade explain --corpus corpus/ --vocab vocab.txt --weights model.bin --sample malicious_00003
    cfgevade attack --rounds 1,2,3,5 --trials 3 --samples 200 --weights model.bin --corpus corpus/
    cfgevade report --in reports/ --plot rates.png
    cfgevade stats --corpus corpus/ --top 10

Exit codes: 0 success, 1 usage error, 2 data/validation error.
"""
import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .common.exceptions import (
    CFGEvadeException, ShapeMismatchError, UnknownSubcommandError, UsageError, ValidationException,
)

logger = logging.getLogger(__name__)

COMMANDS = ("gen-corpus", "build-vocab", "train", "eval", "explain", "attack", "report", "stats")
SPLITS = ("all", "train", "test")


class _ArgumentParser(argparse.ArgumentParser):
    """Raises UsageError instead of exiting so run() owns the exit code."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _rounds_list(text: str) -> List[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("at least one rounds value is required")
    return sorted(set(values))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="YAML or JSON run config")
    common.add_argument("--seed", type=int, help="Global seed (overrides CFGEVADE_SEED and config)")
    common.add_argument("--threads", type=int, help="Worker threads")
    common.add_argument("--log-level", type=str, default="INFO")
    common.add_argument("--log-file", type=str)

    parser = _ArgumentParser(prog="cfgevade", description="Explainability-guided evasion of CFG malware classifiers")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("gen-corpus", parents=[common], help="Generate a synthetic CFG corpus")
    p.add_argument("--benign", type=int)
    p.add_argument("--malicious", type=int)
    p.add_argument("--signal", type=float, help="Signal strength in [0, 1]")
    p.add_argument("--out", type=str, help="Corpus directory")

    p = sub.add_parser("build-vocab", parents=[common], help="Build the wordpiece vocabulary")
    p.add_argument("--corpus", type=str)
    p.add_argument("--size", type=int)
    p.add_argument("--out", type=str, help="Vocab file")

    p = sub.add_parser("train", parents=[common], help="Train the classifier")
    p.add_argument("--corpus", type=str)
    p.add_argument("--vocab", type=str)
    p.add_argument("--out", type=str, help="Weight file")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--train-log", type=str, help="Per-epoch JSONL log (default <out>.log.jsonl)")

    p = sub.add_parser("eval", parents=[common], help="Evaluate a trained classifier")
    p.add_argument("--corpus", type=str)
    p.add_argument("--vocab", type=str)
    p.add_argument("--weights", type=str)
    p.add_argument("--split", choices=SPLITS, default="test")

    p = sub.add_parser("explain", parents=[common], help="Integrated-gradients report for one sample")
    p.add_argument("--corpus", type=str)
    p.add_argument("--vocab", type=str)
    p.add_argument("--weights", type=str)
    p.add_argument("--sample", type=str, help="Sample name (default: first malicious sample)")
    p.add_argument("--steps", type=int)

    p = sub.add_parser("attack", parents=[common], help="Run attack campaigns")
    p.add_argument("--corpus", type=str)
    p.add_argument("--vocab", type=str)
    p.add_argument("--weights", type=str)
    p.add_argument("--rounds", type=_rounds_list, help="Rounds limit(s), e.g. 1,2,3,5")
    p.add_argument("--trials", type=int)
    p.add_argument("--samples", type=int, help="Sample limit per trial")
    p.add_argument("--split", choices=SPLITS, default="test")
    p.add_argument("--out", type=str, help="Report directory")
    p.add_argument("--outcomes", type=str, help="Per-sample outcomes as JSON lines")
    p.add_argument("--plot", type=str, help="Success-rate plot (PNG)")

    p = sub.add_parser("report", parents=[common], help="Render saved campaign results")
    p.add_argument("--in", dest="inputs", nargs="+", required=True, help="report.json files or report dirs")
    p.add_argument("--out", type=str, help="Directory for the merged report")
    p.add_argument("--plot", type=str, help="Success-rate plot (PNG)")

    p = sub.add_parser("stats", parents=[common], help="Function-call frequency table")
    p.add_argument("--corpus", type=str)
    p.add_argument("--top", type=int, default=10)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Flag values mapped onto config sections; unset flags are left out."""
    table = {
        "threads": ("threads",),
        "benign": ("corpus", "n_benign"),
        "malicious": ("corpus", "n_malicious"),
        "signal": ("corpus", "signal_strength"),
        "size": ("tokenizer", "vocab_size"),
        "epochs": ("train", "epochs"),
        "batch_size": ("train", "batch_size"),
        "lr": ("train", "learning_rate"),
        "trials": ("attack", "trials"),
        "samples": ("attack", "sample_limit"),
        "steps": ("attack", "ig_steps"),
        "corpus": ("paths", "corpus_dir"),
        "vocab": ("paths", "vocab_file"),
        "weights": ("paths", "weights_file"),
    }
    outputs = {
        "gen-corpus": ("paths", "corpus_dir"),
        "build-vocab": ("paths", "vocab_file"),
        "train": ("paths", "weights_file"),
        "attack": ("paths", "report_dir"),
        "report": ("paths", "report_dir"),
    }
    overrides: Dict[str, Any] = {}

    def put(path, value):
        node = overrides
        for key in path[:-1]:
            node = node.setdefault(key, {})
        node[path[-1]] = value

    for name, path in table.items():
        value = getattr(args, name, None)
        if value is not None:
            put(path, value)
    if getattr(args, "out", None) is not None and args.command in outputs:
        put(outputs[args.command], args.out)
    return overrides


def _show_progress() -> bool:
    return sys.stderr.isatty()


def _sequences(run):
    from .data.loaders import linearize_corpus, load_corpus
    return linearize_corpus(load_corpus(run.paths.corpus_dir), max_calls=None)


def _select_split(items: Sequence, split: str, run) -> List:
    from .model.trainer import split_corpus
    if split == "all":
        return list(items)
    train_part, held_out = split_corpus(items, run.train.train_fraction, run.seed)
    return train_part if split == "train" else held_out


def _load_model_and_vocab(run):
    from .model.checkpoint import load_model
    from .tokenizer.wordpiece import Vocab

    vocab = Vocab.load(run.paths.vocab_file)
    model = load_model(run.paths.weights_file)
    if model.vocab_size != len(vocab):
        raise ShapeMismatchError("vocab", (model.vocab_size,), (len(vocab),))
    if model.max_positions != run.tokenizer.max_tokens:
        run.tokenizer = dataclasses.replace(run.tokenizer, max_tokens=model.max_positions)
    return model, vocab


def cmd_gen_corpus(args, run) -> int:
    from .data.loaders import save_corpus
    from .graph.builder import synth_corpus

    graphs = synth_corpus(run.corpus, threads=run.threads)
    save_corpus(graphs, run.paths.corpus_dir)
    print(f"Wrote {len(graphs)} graphs to {run.paths.corpus_dir}")
    return 0


def cmd_build_vocab(args, run) -> int:
    from .graph.builder import IMPORT_NAME_CHARS
    from .tokenizer.wordpiece import build_vocab

    windows = [seq.window(run.tokenizer.max_calls) for seq in _sequences(run)]
    train_part = _select_split(windows, "train", run)
    vocab = build_vocab(
        train_part, size=run.tokenizer.vocab_size,
        extra_chars=IMPORT_NAME_CHARS, min_frequency=run.tokenizer.min_frequency,
    )
    Path(run.paths.vocab_file).parent.mkdir(parents=True, exist_ok=True)
    vocab.save(run.paths.vocab_file)
    print(f"Wrote {len(vocab)} tokens to {run.paths.vocab_file}")
    return 0


def cmd_train(args, run) -> int:
    from .model.checkpoint import save_model
    from .model.trainer import Trainer
    from .tokenizer.wordpiece import Vocab, encode_corpus

    vocab = Vocab.load(run.paths.vocab_file)
    samples = encode_corpus(vocab, _sequences(run), run.tokenizer.max_calls, run.tokenizer.max_tokens)
    weights = Path(run.paths.weights_file)
    weights.parent.mkdir(parents=True, exist_ok=True)
    log_path = args.train_log or f"{weights}.log.jsonl"

    result = Trainer(run.model_config(len(vocab)), run.train, log_path=log_path, progress=_show_progress()).fit(samples)
    save_model(result.model, weights)
    print(json.dumps(result.history[-1].to_dict(), sort_keys=True))
    return 0


def cmd_eval(args, run) -> int:
    from .model.trainer import evaluate
    from .tokenizer.wordpiece import encode_corpus

    model, vocab = _load_model_and_vocab(run)
    samples = encode_corpus(vocab, _sequences(run), run.tokenizer.max_calls, run.tokenizer.max_tokens)
    metrics = evaluate(model, _select_split(samples, args.split, run), run.attack.threshold)
    result = {"split": args.split}
    result.update(metrics.to_dict())
    print(json.dumps(result, sort_keys=True))
    return 0


def cmd_explain(args, run) -> int:
    from .attribution.integrated_gradients import explain
    from .graph.cfg import Label
    from .tokenizer.wordpiece import encode_sequence

    model, vocab = _load_model_and_vocab(run)
    sequences = _sequences(run)
    if args.sample:
        matches = [s for s in sequences if s.name == args.sample]
    else:
        matches = [s for s in sequences if s.label is Label.MALICIOUS]
    if not matches and args.sample:
        raise ValidationException(f"No sample named {args.sample!r} in {run.paths.corpus_dir}")
    if not matches:
        raise ValidationException(f"No malicious sample in {run.paths.corpus_dir}")

    seq = matches[0].window(run.tokenizer.max_calls)
    report = explain(model, encode_sequence(vocab, seq, run.tokenizer.max_tokens), steps=run.attack.ig_steps)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_attack(args, run) -> int:
    from .attack.campaign import run_campaign
    from .evaluation.report import plot_success_rates, write_report

    model, vocab = _load_model_and_vocab(run)
    targets = _select_split(_sequences(run), args.split, run)
    rounds = args.rounds or [run.attack.rounds]

    sink = open(args.outcomes, "w", encoding="utf-8") if args.outcomes else None
    try:
        campaigns = [
            run_campaign(model, vocab, targets, dataclasses.replace(run.attack, rounds=r),
                         threads=run.threads, outcome_sink=sink)
            for r in rounds
        ]
    finally:
        if sink:
            sink.close()

    text = write_report(run.paths.report_dir, campaigns)
    if args.plot:
        plot_success_rates(campaigns, args.plot)
    sys.stdout.write(text)
    return 0


def cmd_report(args, run) -> int:
    from .evaluation.report import load_campaigns, plot_success_rates, render_report, write_report

    campaigns = [c for path in args.inputs for c in load_campaigns(path)]
    if args.out:
        text = write_report(args.out, campaigns)
    else:
        text, _ = render_report(campaigns)
    if args.plot:
        plot_success_rates(campaigns, args.plot)
    sys.stdout.write(text)
    return 0


def cmd_stats(args, run) -> int:
    from .data.dataset_stats import format_frequency_table, function_frequency_by_label

    table = function_frequency_by_label(_sequences(run))
    sys.stdout.write(format_frequency_table(table, top=args.top))
    return 0


HANDLERS = {
    "gen-corpus": cmd_gen_corpus,
    "build-vocab": cmd_build_vocab,
    "train": cmd_train,
    "eval": cmd_eval,
    "explain": cmd_explain,
    "attack": cmd_attack,
    "report": cmd_report,
    "stats": cmd_stats,
}


def _dispatch(argv: List[str]) -> int:
    from .utils.config import build_run_config
    from .utils.log import configure_logging
    from .utils.repro import log_env, seed_everything

    if argv and not argv[0].startswith("-") and argv[0] not in COMMANDS:
        raise UnknownSubcommandError(argv[0], COMMANDS)

    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help(sys.stderr)
        raise UsageError("a subcommand is required")

    configure_logging(args.log_level, args.log_file)
    run = build_run_config(args.config, _overrides(args), seed=args.seed)
    seed_everything(run.seed)
    log_env()
    logger.info("Running %s (seed=%d, threads=%d)", args.command, run.seed, run.threads)
    return HANDLERS[args.command](args, run)


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return _dispatch(argv)
    except SystemExit as e:
        # --help
        return e.code if isinstance(e.code, int) else 0
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except (CFGEvadeException, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
