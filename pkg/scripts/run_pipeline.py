#!/usr/bin/env python3
"""
End-to-end pipeline runner.
Drives gen-corpus -> build-vocab -> train -> eval -> attack for one config,
with every artifact under a single work directory.

    python scripts/run_pipeline.py --config configs/acceptance.yaml --work runs/acceptance --rounds 1,2,3,5
"""
import argparse
import os
import sys

sys.path.insert(0, 'src')

from cfgevade.cli import run


def pipeline_steps(config, work, rounds, seed=None, threads=None):
    """Argument vectors for each stage, in order."""
    corpus = os.path.join(work, "corpus")
    vocab = os.path.join(work, "vocab.txt")
    weights = os.path.join(work, "model.bin")
    common = ["--config", config]
    if seed is not None:
        common += ["--seed", str(seed)]
    if threads is not None:
        common += ["--threads", str(threads)]

    artifacts = ["--corpus", corpus, "--vocab", vocab, "--weights", weights]
    return [
        ("Generating corpus", ["gen-corpus", "--out", corpus]),
        ("Building vocabulary", ["build-vocab", "--corpus", corpus, "--out", vocab]),
        ("Training classifier", ["train", "--corpus", corpus, "--vocab", vocab, "--out", weights]),
        ("Evaluating on held-out split", ["eval"] + artifacts),
        ("Running attack campaigns", ["attack"] + artifacts + [
            "--rounds", rounds,
            "--out", os.path.join(work, "reports"),
            "--outcomes", os.path.join(work, "outcomes.jsonl"),
            "--plot", os.path.join(work, "success_rates.png"),
        ]),
    ], common


def main():
    parser = argparse.ArgumentParser(description="Run the full evasion pipeline for one config")
    parser.add_argument("--config", default="configs/defaults.yaml")
    parser.add_argument("--work", default="runs/default")
    parser.add_argument("--rounds", default="1,2,3,5")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int)
    args = parser.parse_args()

    os.makedirs(args.work, exist_ok=True)
    steps, common = pipeline_steps(args.config, args.work, args.rounds, args.seed, args.threads)

    print("\n" + "=" * 70)
    print(f"PIPELINE: {args.config} -> {args.work}")
    print("=" * 70 + "\n")

    for idx, (title, argv) in enumerate(steps, start=1):
        print(f"[{idx}/{len(steps)}] {title}...")
        code = run(argv + common)
        if code != 0:
            print(f"  [FAIL] {argv[0]} exited with {code}")
            return code

    print(f"\nReports in {os.path.join(args.work, 'reports')}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
