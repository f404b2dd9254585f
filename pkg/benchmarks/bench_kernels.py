"""Compare the numba and numpy kernel backends on a synthetic graph.

Run from the repository root:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --entities 4000 --triples 40000

Each kernel is timed over the same workload with both backends after a
warmup call (the first numba call pays JIT compilation). Outputs are
cross-checked for equality before any timing is reported.
"""

import argparse
import random
import time

import numpy as np

from kginterp.kernels import active_backend, enumerate_walks, ground_counts
from kginterp.kg import augment_inverses, load_kg


def synthetic_graph(n_entities: int, n_relations: int, n_triples: int, seed: int):
    rng = random.Random(seed)
    lines = set()
    while len(lines) < n_triples:
        h = rng.randrange(n_entities)
        t = rng.randrange(n_entities)
        r = rng.randrange(n_relations)
        lines.add(f"e{h}\tr{r}\te{t}\n")
    return augment_inverses(load_kg(sorted(lines)))


def bench(label, fn, args_list, backends):
    """Time fn over args_list per backend; returns {backend: seconds}."""
    outputs = {}
    times = {}
    for backend in backends:
        fn(*args_list[0], backend=backend)  # warmup / JIT compile
        t0 = time.perf_counter()
        out = [fn(*args, backend=backend) for args in args_list]
        times[backend] = time.perf_counter() - t0
        outputs[backend] = out
    if len(backends) == 2:
        a, b = (outputs[bk] for bk in backends)
        for x, y in zip(a, b):
            if isinstance(x, tuple) and isinstance(x[0], np.ndarray):
                assert all(np.array_equal(p, q) for p, q in zip(x, y))
            else:
                assert np.array_equal(np.asarray(x), np.asarray(y))
    row = f"{label:<18}"
    for backend in backends:
        row += f"  {backend}: {times[backend]:8.3f}s"
    if len(backends) == 2 and times[backends[0]] > 0:
        row += f"  speedup: {times[backends[1]] / times[backends[0]]:6.2f}x"
    print(row)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--entities", type=int, default=2000)
    ap.add_argument("--relations", type=int, default=24)
    ap.add_argument("--triples", type=int, default=20000)
    ap.add_argument("--queries", type=int, default=200)
    ap.add_argument("--rules", type=int, default=300)
    ap.add_argument("--max-hops", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = ["numba", "numpy"] if active_backend() == "numba" else ["numpy"]
    if len(backends) == 1:
        print("numba unavailable; timing the numpy backend only")

    kg = synthetic_graph(args.entities, args.relations, args.triples, args.seed)
    print(f"graph: {kg.n_entities} entities, {kg.n_base_relations} relations, "
          f"{len(kg.train)} triples, max_hops={args.max_hops}")

    rng = random.Random(args.seed)
    rows = [kg.train[rng.randrange(len(kg.train))] for _ in range(args.queries)]
    walk_args = []
    for h, r, t in rows:
        ex = (int(h), int(r), int(t), kg.inverse_of(int(r)))
        walk_args.append((kg.adjacency, int(h), int(t), args.max_hops, ex))
    bench("enumerate_walks", enumerate_walks, walk_args, backends)

    count_args = []
    for _ in range(args.rules):
        body = [rng.randrange(kg.n_relations) for _ in range(rng.randint(1, 3))]
        head = rng.randrange(kg.n_base_relations)
        count_args.append((kg.adjacency, body, head))
    bench("ground_counts", ground_counts, count_args, backends)


if __name__ == "__main__":
    main()
