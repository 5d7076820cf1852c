#!/usr/bin/env python3
"""The full protocol at demo scale: fuzz, train, reinitialize, compare.

Phase 1 builds a training corpus with two workers; each strategy then gets
its own freshly reinitialized fuzzer and a phase-2 budget. Runs in a couple
of minutes; pass an output directory to keep the artifacts.
"""

import sys
import tempfile

from ganfuzz.experiment import ExperimentPlan, format_reports_text, run_experiment


def main() -> None:
    plan = ExperimentPlan(
        phase1_execs=50_000, workers=2, phase2_execs=30_000,
        strategies=("continue", "rand_urandom", "rand_corpus", "lstm", "gan"),
        samples_per_strategy=100, rng_seed=0,
        gan_epochs=60, gan_batch_size=64, gan_anneal_after=20, gan_restarts=1,
        lstm_epochs=3, lstm_hidden=32,
    )
    if len(sys.argv) > 1:
        out = sys.argv[1]
        reports = run_experiment(plan, out)
        print(f"artifacts kept in {out}\n")
    else:
        with tempfile.TemporaryDirectory() as tmp:
            reports = run_experiment(plan, tmp + "/run")
    print(format_reports_text(reports))
    print("discovered-path counts are phase-2 admissions beyond the injected")
    print("seeds; at demo budgets zero rows are common and meaningful.")


if __name__ == "__main__":
    main()
