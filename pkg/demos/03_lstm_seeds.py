#!/usr/bin/env python3
"""Train the byte-level recurrent generator and sample at three temperatures.

Low temperature is near-greedy and parrots corpus structure; higher
temperatures diversify, which is the point of the temperature knob when
producing fuzzing seeds.
"""

from ganfuzz.fuzzer import FuzzConfig, FuzzerState, fuzz_loop
from ganfuzz.lstm import LstmConfig, lstm_generate, train_lstm
from ganfuzz.targets import MINIKEY


def main() -> None:
    state = FuzzerState.from_seeds([b"MKEY"], MINIKEY, FuzzConfig(rng_seed=0))
    fuzz_loop(state, MINIKEY, 30_000)
    corpus = [e.data for e in state.queue]
    print(f"training corpus: {len(corpus)} seeds")

    model = train_lstm(corpus, LstmConfig(hidden_width=64, dense_width=64,
                                          epochs=10, rng_seed=0))
    print(f"trained in {model.train_time:.1f}s, "
          f"final loss {model.losses[-1]:.3f}\n")

    for temperature in (1e-5, 0.7, 1.5):
        batch = lstm_generate(model, 3, temperature, corpus, rng_seed=5)
        label = "greedy" if temperature < 1e-4 else f"t={temperature}"
        print(f"{label}:")
        for s in batch.seeds:
            print(f"  {s[:32]!r}")
        print()


if __name__ == "__main__":
    main()
