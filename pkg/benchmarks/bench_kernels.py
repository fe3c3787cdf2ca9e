"""Time the compiled kernels against the numpy fallback on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from theta_powers import kernels
from theta_powers.kernels import _pykernels
from theta_powers.radical import _basis_fracs, build_basis


def cases():
    F = _basis_fracs(build_basis(2, 2))
    pw = np.arange(301, dtype=np.float64) ** 1.5
    thr = 1.0 / np.maximum(np.arange(301, dtype=np.float64), 1) ** 2
    thetas = 1 + (np.arange(20000) + 0.5) / 20000
    table = np.arange(33, dtype=np.float64)[None, :] ** thetas[:, None]
    omegas = np.array([(a, 32) for a in range(1, 33)], dtype=np.int64)
    lo, hi = np.zeros(3, dtype=np.int64), np.full(3, 60, dtype=np.int64)
    return {
        "lattice_fracs (61^3)": lambda k: k.lattice_fracs(F, lo, hi),
        "multiset_best (k=4, 40 terms)": lambda k: k.multiset_best(np.resize(F, 40), 4, 1 << 63),
        "power_sum_screen (k=2, M=300)": lambda k: k.power_sum_screen(pw, 2, 300, thr, 1e-12),
        "vm_hits (20000 x 32)": lambda k: k.vm_hits(table, omegas, 1 / 32**2),
    }


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("numpy", _pykernels)]
    if kernels.compiled():
        from theta_powers.kernels import _ckernels

        backends.append(("cython", _ckernels))
    else:
        print("compiled extension not built; timing the numpy fallback only")
    print(f"{'kernel':34s}" + "".join(f"{n:>12s}" for n, _ in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, fn in cases().items():
        times = [min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) for _, mod in backends]
        row = f"{name:34s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
