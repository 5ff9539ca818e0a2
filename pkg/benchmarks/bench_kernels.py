"""Time the compiled kernels against the numpy fallback.

Generates a synthetic trace, then measures the two hot operations on the
exact arrays the pipeline feeds them: ordered pair enumeration over all
episodes and per-episode time-respecting reachability.  Both backends are
imported side by side (the package-level selector is bypassed), their
outputs are checked for equality, and the best-of-N wall times are printed.

Run from the repo root after an editable install:

    python3 benchmarks/bench_kernels.py --users 400 --cascades 2000
"""

import argparse
import time

import numpy as np

from tracegraph import (SynthConfig, build_episodes, generate_graph,
                        generate_trace, preprocess)
from tracegraph._kernels import pure

try:
    from tracegraph._kernels import _ckern
except ImportError:
    _ckern = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--users", type=int, default=400)
    ap.add_argument("--density", type=float, default=0.02)
    ap.add_argument("--cascades", type=int, default=2000)
    ap.add_argument("--activation", type=float, default=0.3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    cfg = SynthConfig(seed=args.seed, n=args.users, edge_density=args.density,
                      cascades=args.cascades, activation_prob=args.activation)
    truth = generate_graph(cfg)
    trace, _ = preprocess(generate_trace(truth, cfg))
    episodes = build_episodes(trace)
    flat, offsets = episodes.member_arrays()
    n = episodes.n_users
    sizes = np.diff(offsets)
    print(f"workload: {len(offsets) - 1} episodes, {flat.size} members, "
          f"largest episode {int(sizes.max()) if sizes.size else 0}, "
          f"{truth.n_edges} true edges")

    backends = [("python", pure)]
    if _ckern is not None:
        backends.append(("cython", _ckern))
    else:
        print("compiled module not importable; timing the fallback only")

    ref_keys = pure.ordered_pair_keys(flat, offsets, n)
    ref_reach = pure.reach_episodes(flat, offsets, truth.edge_keys, n)

    results = {}
    for name, impl in backends:
        keys = impl.ordered_pair_keys(flat, offsets, n)
        np.testing.assert_array_equal(keys, ref_keys)
        reach = impl.reach_episodes(flat, offsets, truth.edge_keys, n)
        for got, want in zip(reach, ref_reach):
            np.testing.assert_array_equal(got, want)
        results[name] = (
            best_of(lambda: impl.ordered_pair_keys(flat, offsets, n),
                    args.repeats),
            best_of(lambda: impl.reach_episodes(flat, offsets,
                                                truth.edge_keys, n),
                    args.repeats),
        )

    print(f"\n{'backend':<10} {'pair_keys':>12} {'reach':>12}")
    for name, (t_pairs, t_reach) in results.items():
        print(f"{name:<10} {t_pairs * 1e3:>10.2f}ms {t_reach * 1e3:>10.2f}ms")
    if len(results) == 2:
        py, cy = results["python"], results["cython"]
        print(f"{'speedup':<10} {py[0] / cy[0]:>11.1f}x {py[1] / cy[1]:>11.1f}x")


if __name__ == "__main__":
    main()
