"""Both kernel builds (numba and numpy/python) compute identical results."""

import subprocess
import sys

import numpy as np

from dronelang._accel import HAVE_NUMBA, active_mode
from dronelang.avoidance import astar_kernel, astar_kernel_python, OccupancyGrid
from dronelang.energy import (
    _total_power_loop,
    _window_sums_loop,
    total_power_kernel,
    total_power_numpy,
    window_sums_kernel,
    window_sums_numpy,
)
from dronelang.sim import bundled_world


def test_power_kernels_agree():
    rng = np.random.default_rng(7)
    motors = np.ascontiguousarray(rng.uniform(0.0, 1.0, size=(5000, 4)))
    active = total_power_kernel(motors, 100.0)
    assert np.allclose(active, total_power_numpy(motors, 100.0), rtol=1e-12)
    assert np.allclose(active, _total_power_loop(motors, 100.0), rtol=1e-12)


def test_window_kernels_agree():
    rng = np.random.default_rng(8)
    power = np.ascontiguousarray(rng.uniform(0.0, 400.0, size=5000))
    active = window_sums_kernel(power, 100, 50)
    assert np.allclose(active, window_sums_numpy(power, 100, 50), rtol=1e-12)
    assert np.allclose(active, _window_sums_loop(power, 100, 50), rtol=1e-12)


def test_astar_builds_identical_parents():
    world = bundled_world("apartment_busy")
    grid = OccupancyGrid.from_world(world)
    nx, ny, nz = grid.shape
    occ = np.ascontiguousarray(grid.occupied.reshape(-1).astype(np.uint8))
    start = (13 * ny + 11) * nz + 1
    goal = (20 * ny + 11) * nz + 1
    active = astar_kernel(occ, nx, ny, nz, start, goal)
    python = astar_kernel_python(occ, nx, ny, nz, start, goal)
    # identical predecessor chain from the goal back to the start
    def chain(parent):
        node = goal
        out = [node]
        while node != start:
            node = int(parent[node])
            out.append(node)
        return out

    assert chain(active) == chain(python)


def test_env_flag_selects_fallback():
    # a fresh interpreter with the flag off must run on the numpy path
    code = (
        "import os; os.environ['DRONELANG_NUMBA']='0'; "
        "from dronelang._accel import active_mode; print(active_mode())"
    )
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "numpy"
    assert active_mode() in ("numba", "numpy")
    if HAVE_NUMBA:
        assert active_mode() == "numba"
