"""
Search latency
==============

Exhaustive popcount search over packed codes; time grows with the database.
"""

import numpy as np

from brcd.codes import CodeMatrix
from brcd.search import bench, build

rng = np.random.default_rng(5)
b = 64
queries = [CodeMatrix(np.packbits(rng.random((n, b)) < 0.5, axis=1, bitorder="little"), b) for n in (1, 16)]

for N in (10_000, 100_000, 1_000_000):
    db = CodeMatrix(np.packbits(rng.random((N, b)) < 0.5, axis=1, bitorder="little"), b)
    for row in bench(build(db), queries, K=100, repetitions=3):
        print(f"N={N:>9,}  batch={row['batch_size']:>2}  mean {row['mean_ms']:8.2f} ms")
