"""Compare the compiled and pure-Python kernels on forward+backward over random trees.

    python benchmarks/bench_kernels.py --hidden 250 --trees 20
"""
import argparse
import time

import numpy as np

from treecomp.encoder import compile_tree
from treecomp.kernels import available_backends, load_backend
from treecomp.corpus import Vocab
from treecomp.model import MODES
from treecomp.synthetic import POS_TAGS, PHRASE_TAGS, random_binary_tree
from treecomp.trainer import Example, init_model, instance_gradients, TrainingConfig


def make_examples(rng, n, leaves, vocab_words):
    vocab = Vocab({w: i for i, w in enumerate(["<unk>"] + vocab_words)},
                  {t: i for i, t in enumerate(("<unk>",) + POS_TAGS + PHRASE_TAGS)}, ("a", "b", "c", "d"))
    out = []
    for _ in range(n):
        args = []
        for _ in range(2):
            words = list(rng.choice(vocab_words, leaves))
            pos = list(rng.choice(POS_TAGS, leaves))
            args.append(compile_tree(random_binary_tree(rng, words, pos, lambda: str(rng.choice(PHRASE_TAGS))), vocab))
        out.append(Example(args[0], args[1], (int(rng.integers(0, 4)),)))
    return vocab, out


def bench(mode, backend_name, examples, vocab, hidden, dims, repeats):
    cfg = TrainingConfig(word_dim=dims, tag_dim=dims, hidden=hidden, mode=mode)
    params = init_model(cfg, len(vocab.word_to_id), len(vocab.tag_to_id), 4)
    backend = load_backend(backend_name)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for ex in examples:
            instance_gradients(params, ex, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best / len(examples)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--hidden", type=int, default=250)
    ap.add_argument("--dims", type=int, default=50)
    ap.add_argument("--trees", type=int, default=20)
    ap.add_argument("--leaves", type=int, default=20)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--modes", nargs="*", default=list(MODES))
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    vocab, examples = make_examples(rng, args.trees, args.leaves, [f"w{i}" for i in range(200)])
    backends = available_backends()
    print(f"hidden={args.hidden} dims={args.dims} leaves/arg={args.leaves} backends={backends}")
    print(f"{'mode':<15}" + "".join(f"{b + ' ms/inst':>20}" for b in backends) + f"{'speedup':>10}")
    for mode in args.modes:
        times = {b: bench(mode, b, examples, vocab, args.hidden, args.dims, args.repeats) for b in backends}
        speed = times["python"] / times["compiled"] if len(times) == 2 else float("nan")
        print(f"{mode:<15}" + "".join(f"{1e3 * times[b]:>20.3f}" for b in backends) + f"{speed:>10.1f}x")


if __name__ == "__main__":
    main()
