"""Regenerates obs.mtx / truth.mtx: an 80 x 60 rank-2 matrix and 1500 of its
entries with N(0, 0.05^2) noise."""
import numpy as np

rng = np.random.default_rng(7)
m, n, r, e = 80, 60, 2, 1500
truth = rng.normal(size=(m, r)) @ rng.normal(size=(n, r)).T
picked = np.sort(rng.choice(m * n, size=e, replace=False))
header = "%%MatrixMarket matrix coordinate real general\n"

with open("truth.mtx", "w") as f:
    f.write(header + f"{m} {n} {m * n}\n")
    for i in range(m):
        for j in range(n):
            f.write(f"{i + 1} {j + 1} {truth[i, j]:.17g}\n")

with open("obs.mtx", "w") as f:
    f.write(header + f"{m} {n} {e}\n")
    for k in picked:
        i, j = divmod(int(k), n)
        f.write(f"{i + 1} {j + 1} {truth[i, j] + 0.05 * rng.normal():.17g}\n")
