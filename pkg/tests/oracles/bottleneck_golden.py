"""Brute-force oracle for the bundled 14-bit bottleneck instance.

Independent of the package: parses the matrix by hand, enumerates connected
vertex sets by breadth-first growth over bitmasks and classifies every
configuration directly.  Writes the golden JSON used by the CLI tests.

    python3 tests/oracles/bottleneck_golden.py src/tqsg/data/bottleneck14.gf2 \
        src/tqsg/data/bottleneck14_golden.json
"""
from __future__ import annotations

import json
import math
import sys

import numpy as np

BETAS = [0.5, 1.0, 1.5, 2.0, 3.0]
DELTA = 8


def parse(path):
    lines = open(path).read().split("\n")
    i = next(j for j, l in enumerate(lines) if l.startswith("gf2 "))
    _, rows, cols = lines[i].split()
    rows, cols = int(rows), int(cols)
    masks = []
    for l in lines[i + 1: i + 1 + rows]:
        masks.append(sum(1 << int(t) for t in l.split()))
    return masks, cols


def connected_sets(adj, n):
    seen = set()
    frontier = {1 << v for v in range(n)}
    while frontier:
        seen |= frontier
        nxt = set()
        for s in frontier:
            for v in range(n):
                if s >> v & 1:
                    for u in adj[v]:
                        t = s | (1 << u)
                        if t != s and t not in seen:
                            nxt.add(t)
        frontier = nxt
    return np.array(sorted(seen), dtype=np.int64)


def main(src, dst):
    checks, n = parse(src)
    adj = [set() for _ in range(n)]
    for c in checks:
        vs = [v for v in range(n) if c >> v & 1]
        for a in vs:
            for b in vs:
                if a != b:
                    adj[a].add(b)
    subsets = connected_sets(adj, n)
    sizes = np.bitwise_count(subsets).astype(np.int64)
    N = 1 << n
    maxconn = np.zeros(N, np.int64)
    for a in range(N):
        ok = 2 * np.bitwise_count(subsets & a).astype(np.int64) >= sizes
        maxconn[a] = sizes[ok].max(initial=0)
    inside = 2 * maxconn <= DELTA
    radius = math.ceil(DELTA / 4) - 1
    idx = np.arange(N)
    near = np.zeros(N, bool)
    # radius is 1 for DELTA = 8
    assert radius == 1
    for v in range(n):
        near |= inside[idx ^ (1 << v)]
    region = np.where(inside, 0, np.where(near, 1, 2))
    energy = np.zeros(N, np.int64)
    for c in checks:
        energy += np.bitwise_count(idx & c).astype(np.int64) & 1
    out = {"instance": "bottleneck14", "delta_probe": DELTA, "x0": [0] * n,
           "counts": {"inside": int((region == 0).sum()), "boundary": int((region == 1).sum()),
                      "outside": int((region == 2).sum())},
           "results": []}
    for beta in BETAS:
        lw = []
        for r in (0, 1, 2):
            e = energy[region == r]
            emin = e.min()
            lw.append(-beta * emin + math.log(math.fsum(math.exp(-beta * (v - emin)) for v in e.tolist())))
        out["results"].append({"beta": beta, "log_w_omega": lw[0], "log_w_boundary": lw[1],
                               "log_w_outside": lw[2], "log_ratio": lw[1] - lw[0]})
    with open(dst, "w") as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
