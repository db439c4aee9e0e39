"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in a fresh interpreter because the switch
(CYHEIGHT_NO_NUMBA) is read at import time.

    python benchmarks/bench_kernels.py [--sizes 100,200,400] [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from cyheight import _accel
from cyheight.linalg import rank_mod_p
from cyheight.wittcore import witt_batch

sizes, repeat = json.loads(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)
out = {"backend": _accel.backend(), "rank": {}, "witt": {}}
# warm-up (includes JIT compilation, reported separately)
t = time.perf_counter()
rank_mod_p(rng.integers(0, 7, (20, 20)), 7)
witt_batch("prod", rng.integers(0, 5, (4, 3)), rng.integers(0, 5, (4, 3)), 5)
out["warmup"] = time.perf_counter() - t
for n in sizes:
    A = rng.integers(0, 7, (n, n + n // 2))
    A[n // 2:] = (A[: n - n // 2] * 3) % 7  # rank deficient
    ts = []
    for _ in range(repeat):
        t = time.perf_counter(); r = rank_mod_p(A, 7); ts.append(time.perf_counter() - t)
    out["rank"][n] = (min(ts), r)
for B in (1000, 10000):
    W, V = rng.integers(0, 5, (B, 3)), rng.integers(0, 5, (B, 3))
    ts = []
    for _ in range(repeat):
        t = time.perf_counter(); P = witt_batch("prod", W, V, 5); ts.append(time.perf_counter() - t)
    out["witt"][B] = (min(ts), int(P.sum()))
print(json.dumps(out))
"""


def run(no_numba, sizes, repeat):
    env = dict(os.environ)
    env["CYHEIGHT_NO_NUMBA"] = "1" if no_numba else "0"
    res = subprocess.run([sys.executable, "-c", WORKER, json.dumps(sizes), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="100,200,400")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    fast, slow = run(False, sizes, args.repeat), run(True, sizes, args.repeat)
    print(f"warm-up: {fast['backend']} {fast['warmup']:.2f}s, {slow['backend']} {slow['warmup']:.2f}s")
    print(f"{'kernel':<22}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}  agree")
    for n in sizes:
        (a, ra), (b, rb) = fast["rank"][str(n)], slow["rank"][str(n)]
        print(f"{'rank ' + str(n) + 'x' + str(n + n // 2):<22}{a:>11.4f}s{b:>11.4f}s{b / a:>9.1f}x  {ra == rb}")
    for B in ("1000", "10000"):
        (a, ca), (b, cb) = fast["witt"][B], slow["witt"][B]
        print(f"{'witt prod W_3 B=' + B:<22}{a:>11.4f}s{b:>11.4f}s{b / a:>9.1f}x  {ca == cb}")


if __name__ == "__main__":
    main()
