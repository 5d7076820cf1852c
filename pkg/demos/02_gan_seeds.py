#!/usr/bin/env python3
"""Train the adversarial generator on a fuzzed corpus and sample seed files.

Builds a corpus by fuzzing minikey, trains the generator/discriminator pair
with the annealed, checkpoint-selected recipe, and measures how closely the
samples reproduce the corpus's structural signature: the 4-byte magic.
Byte-exact reproduction of a 4-byte field is a ~2.3e-9 event for uniform
random bytes, so even a handful of hits per 10^5 samples is a strong signal.
Takes two to three minutes.
"""

import numpy as np

from ganfuzz.codec import decode_floats
from ganfuzz.fuzzer import FuzzConfig, FuzzerState, fuzz_loop
from ganfuzz.gan import GanConfig, gan_generate, train_gan
from ganfuzz.nn import forward
from ganfuzz.targets import MINIKEY

MAGIC = b"MKEY"


def main() -> None:
    state = FuzzerState.from_seeds([MAGIC], MINIKEY, FuzzConfig(rng_seed=0))
    fuzz_loop(state, MINIKEY, 200_000)
    corpus = [e.data for e in state.queue]
    with_magic = sum(1 for c in corpus if c[:4] == MAGIC)
    print(f"training corpus: {len(corpus)} seeds, {with_magic} carry the magic")

    config = GanConfig(epochs=200, batch_size=512, g_lr=0.02, d_lr=0.002,
                       anneal_after_epoch=60, anneal_factor=0.97,
                       restarts=2, rng_seed=500)
    model = train_gan(corpus, config)
    print(f"trained in {model.train_time:.0f}s, output_len {model.output_len}, "
          f"probe moment score {model.moment_score:.1f}")

    batch = gan_generate(model, 200, rng_seed=1)
    prefixes = np.frombuffer(b"".join(s[:4] for s in batch.seeds),
                             dtype=np.uint8).reshape(-1, 4).astype(int)
    target = np.frombuffer(MAGIC, dtype=np.uint8).astype(int)
    deviation = np.abs(prefixes - target).mean(axis=0)
    print(f"\nmean |byte - magic| per position: {np.round(deviation, 1)}")
    print("(uniform random bytes would sit near 85 on every position)")

    rng = np.random.Generator(np.random.PCG64(99))
    hits = 0
    for _ in range(10):
        z = rng.uniform(-1.0, 1.0, size=(20_000, model.latent_dim))
        for row in forward(model.generator, z, cache=False):
            if decode_floats(row[:4]) == MAGIC:
                hits += 1
    print(f"byte-exact magic prefixes: {hits} in 2e5 samples "
          f"(uniform-random expectation: {2e5 * 256.0 ** -4:.6f})")


if __name__ == "__main__":
    main()
