#!/usr/bin/env python3
"""Time the numba kernel builds against their numpy/python fallbacks.

Covers the three hot paths: cubic power summation, SPR window reduction
and the grid A* search. Run from the repo root:

    python3 benchmarks/bench_kernels.py
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from dronelang._accel import HAVE_NUMBA, active_mode
from dronelang.avoidance import (
    OccupancyGrid,
    astar_kernel_compiled,
    astar_kernel_python,
)
from dronelang.energy import (
    total_power_kernel_compiled,
    _total_power_loop,
    total_power_numpy,
    window_sums_kernel_compiled,
    _window_sums_loop,
    window_sums_numpy,
)
from dronelang.sim import bundled_world


def timeit(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def fmt(seconds):
    return f"{seconds * 1e3:9.3f} ms"


def bench_power(n=2_000_000):
    rng = np.random.default_rng(1)
    motors = np.ascontiguousarray(rng.uniform(0.0, 1.0, size=(n, 4)))
    rows = [("numpy", timeit(lambda: total_power_numpy(motors, 100.0)))]
    if HAVE_NUMBA:
        total_power_kernel_compiled(motors[:10], 100.0)   # warm the JIT
        rows.append(("numba", timeit(lambda: total_power_kernel_compiled(motors, 100.0))))
    else:
        rows.append(("python-loop", timeit(lambda: _total_power_loop(motors, 100.0))))
    return rows


def bench_windows(n=2_000_000, per=100):
    rng = np.random.default_rng(2)
    power = np.ascontiguousarray(rng.uniform(0.0, 400.0, size=n))
    count = n // per
    rows = [("numpy", timeit(lambda: window_sums_numpy(power, per, count)))]
    if HAVE_NUMBA:
        window_sums_kernel_compiled(power[:per], per, 1)
        rows.append(("numba", timeit(lambda: window_sums_kernel_compiled(power, per, count))))
    else:
        rows.append(("python-loop", timeit(lambda: _window_sums_loop(power, per, count))))
    return rows


def bench_astar():
    world = bundled_world("apartment_busy")
    grid = OccupancyGrid.from_world(world)
    nx, ny, nz = grid.shape
    occ = np.ascontiguousarray(grid.occupied.reshape(-1).astype(np.uint8))
    start = (13 * ny + 11) * nz + 1
    goal = (24 * ny + 17) * nz + 1   # far corner room
    rows = [("python-loop", timeit(lambda: astar_kernel_python(occ, nx, ny, nz, start, goal), repeat=3))]
    if HAVE_NUMBA:
        astar_kernel_compiled(occ, nx, ny, nz, start, goal)   # warm the JIT
        rows.append(("numba", timeit(lambda: astar_kernel_compiled(occ, nx, ny, nz, start, goal))))
    return rows


def main():
    print(f"active kernel mode: {active_mode()} (numba available: {HAVE_NUMBA})")
    for title, rows in (
        ("cubic power sum, 2M samples x 4 motors", bench_power()),
        ("SPR window reduction, 2M samples / 100-per-window", bench_windows()),
        ("grid A* on the 50^3 busy-apartment grid", bench_astar()),
    ):
        print(f"\n{title}")
        base = rows[0][1]
        for name, seconds in rows:
            speedup = base / seconds if seconds else float("inf")
            print(f"  {name:12s} {fmt(seconds)}   ({speedup:5.1f}x vs {rows[0][0]})")


if __name__ == "__main__":
    main()
