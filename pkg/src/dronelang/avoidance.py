"""Grid path planner standing in for the live obstacle-avoidance tool.

The world is rasterized onto a 1 m occupancy grid (boundary shell
occupied); paths are shortest 6-connected cell sequences found by A* with
the admissible Manhattan heuristic. Ties break deterministically: the
frontier is FIFO among equal f-scores and neighbors are generated in
+x, -x, +y, -y, +z, -z order. The search kernel is one self-contained
function so the numba and plain-python builds share every code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import compile_kernel, jit_kernel
from .commands import Command, WORKSPACE_SIZE, move, rotate
from .sim import WorldModel

_TIE = 1 << 24   # key = f * _TIE + push-counter keeps pops FIFO within an f-score


class Unreachable(RuntimeError):
    pass


class InvalidEndpoint(ValueError):
    pass


@dataclass(frozen=True)
class OccupancyGrid:
    resolution: float
    occupied: np.ndarray   # bool, shape (nx, ny, nz)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.occupied.shape

    @classmethod
    def from_world(
        cls, world: WorldModel, resolution: float = 1.0, include_clutter: bool = True
    ) -> "OccupancyGrid":
        n = int(round(WORKSPACE_SIZE / resolution))
        occupied = np.zeros((n, n, n), dtype=bool)
        boxes = world.obstacles + (world.clutter if include_clutter else [])
        for box in boxes:
            lo = np.asarray(box.lo) / resolution
            hi = np.asarray(box.hi) / resolution
            ranges = []
            for axis in range(3):
                first = max(0, int(np.floor(lo[axis])))
                last = min(n - 1, int(np.ceil(hi[axis])) - 1)
                ranges.append((first, last))
            for i in range(ranges[0][0], ranges[0][1] + 1):
                for j in range(ranges[1][0], ranges[1][1] + 1):
                    for k in range(ranges[2][0], ranges[2][1] + 1):
                        # positive-volume overlap only: face contact stays free
                        if (
                            i < hi[0] and i + 1 > lo[0]
                            and j < hi[1] and j + 1 > lo[1]
                            and k < hi[2] and k + 1 > lo[2]
                        ):
                            occupied[i, j, k] = True
        # workspace walls
        occupied[0, :, :] = occupied[-1, :, :] = True
        occupied[:, 0, :] = occupied[:, -1, :] = True
        occupied[:, :, 0] = occupied[:, :, -1] = True
        return cls(resolution, occupied)

    def cell_of(self, point) -> tuple[int, int, int]:
        p = np.asarray(point, dtype=float) / self.resolution
        n = self.occupied.shape
        return tuple(int(min(max(np.floor(p[a]), 0), n[a] - 1)) for a in range(3))

    def center(self, cell) -> np.ndarray:
        return (np.asarray(cell, dtype=float) + 0.5) * self.resolution

    def is_free(self, cell) -> bool:
        return not bool(self.occupied[cell])


@dataclass(frozen=True)
class WaypointPath:
    cells: tuple[tuple[int, int, int], ...]
    resolution: float

    @property
    def points(self) -> np.ndarray:
        return (np.asarray(self.cells, dtype=float) + 0.5) * self.resolution

    def __len__(self) -> int:
        return len(self.cells)


def _astar_search(occ, nx, ny, nz, start, goal):
    """Flat-array A*; returns the predecessor array (-1 where unvisited)."""
    nyz = ny * nz
    n = nx * nyz
    g = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    closed = np.zeros(n, dtype=np.uint8)
    cap = 6 * n + 16
    heap_key = np.empty(cap, dtype=np.int64)
    heap_val = np.empty(cap, dtype=np.int64)
    size = 0
    counter = 0

    gx = goal // nyz
    gy = (goal % nyz) // nz
    gz = goal % nz
    sx = start // nyz
    sy = (start % nyz) // nz
    sz = start % nz

    g[start] = 0
    parent[start] = start
    h0 = abs(sx - gx) + abs(sy - gy) + abs(sz - gz)
    heap_key[0] = h0 * _TIE + counter
    heap_val[0] = start
    counter += 1
    size = 1

    while size > 0:
        node = heap_val[0]
        size -= 1
        heap_key[0] = heap_key[size]
        heap_val[0] = heap_val[size]
        i = 0
        while True:
            left = 2 * i + 1
            right = left + 1
            smallest = i
            if left < size and heap_key[left] < heap_key[smallest]:
                smallest = left
            if right < size and heap_key[right] < heap_key[smallest]:
                smallest = right
            if smallest == i:
                break
            heap_key[i], heap_key[smallest] = heap_key[smallest], heap_key[i]
            heap_val[i], heap_val[smallest] = heap_val[smallest], heap_val[i]
            i = smallest
        if closed[node] == 1:
            continue
        closed[node] = 1
        if node == goal:
            break
        x = node // nyz
        y = (node % nyz) // nz
        z = node % nz
        ng = g[node] + 1
        for step in range(6):
            if step == 0:
                x2, y2, z2 = x + 1, y, z
            elif step == 1:
                x2, y2, z2 = x - 1, y, z
            elif step == 2:
                x2, y2, z2 = x, y + 1, z
            elif step == 3:
                x2, y2, z2 = x, y - 1, z
            elif step == 4:
                x2, y2, z2 = x, y, z + 1
            else:
                x2, y2, z2 = x, y, z - 1
            if x2 < 0 or x2 >= nx or y2 < 0 or y2 >= ny or z2 < 0 or z2 >= nz:
                continue
            idx = (x2 * ny + y2) * nz + z2
            if occ[idx] == 1 or closed[idx] == 1:
                continue
            if g[idx] == -1 or ng < g[idx]:
                g[idx] = ng
                parent[idx] = node
                h = abs(x2 - gx) + abs(y2 - gy) + abs(z2 - gz)
                key = (ng + h) * _TIE + counter
                counter += 1
                heap_key[size] = key
                heap_val[size] = idx
                i = size
                size += 1
                while i > 0:
                    up = (i - 1) // 2
                    if heap_key[up] <= heap_key[i]:
                        break
                    heap_key[i], heap_key[up] = heap_key[up], heap_key[i]
                    heap_val[i], heap_val[up] = heap_val[up], heap_val[i]
                    i = up
    return parent


astar_kernel = jit_kernel(_astar_search)
astar_kernel_compiled = compile_kernel(_astar_search)
astar_kernel_python = _astar_search


def plan_path(grid: OccupancyGrid, start, goal) -> WaypointPath:
    """Shortest 6-connected path between the cells containing start and goal."""
    nx, ny, nz = grid.shape
    start_cell = grid.cell_of(start)
    goal_cell = grid.cell_of(goal)
    for label, point, cell in (("start", start, start_cell), ("goal", goal, goal_cell)):
        p = np.asarray(point, dtype=float)
        if np.any(p < 0.0) or np.any(p > WORKSPACE_SIZE):
            raise InvalidEndpoint(f"{label} {tuple(p)} outside the workspace")
        if not grid.is_free(cell):
            raise InvalidEndpoint(f"{label} cell {cell} is occupied")
    if start_cell == goal_cell:
        return WaypointPath((start_cell,), grid.resolution)
    occ = np.ascontiguousarray(grid.occupied.reshape(-1).astype(np.uint8))
    s = (start_cell[0] * ny + start_cell[1]) * nz + start_cell[2]
    t = (goal_cell[0] * ny + goal_cell[1]) * nz + goal_cell[2]
    parent = astar_kernel(occ, nx, ny, nz, s, t)
    if parent[t] == -1:
        raise Unreachable(f"no path from {start_cell} to {goal_cell}")
    chain = [t]
    while chain[-1] != s:
        chain.append(int(parent[chain[-1]]))
    chain.reverse()
    cells = tuple(
        (idx // (ny * nz), (idx % (ny * nz)) // nz, idx % nz) for idx in chain
    )
    return WaypointPath(cells, grid.resolution)


_HEADINGS = {(1, 0): 0.0, (0, 1): 90.0, (-1, 0): 180.0, (0, -1): 270.0}


def to_commands(path: WaypointPath, initial_yaw: float = 0.0) -> list[Command]:
    """Compress a waypoint path into rotate/move commands.

    Collinear hops merge into single moves; horizontal direction changes
    become the smallest signed rotation. Replaying the commands from the
    first waypoint reproduces every waypoint within half a cell.
    """
    cells = path.cells
    if len(cells) < 2:
        return []
    hops = [
        tuple(b - a for a, b in zip(p, q)) for p, q in zip(cells[:-1], cells[1:])
    ]
    runs: list[tuple[tuple[int, int, int], int]] = []
    for hop in hops:
        if runs and runs[-1][0] == hop:
            runs[-1] = (hop, runs[-1][1] + 1)
        else:
            runs.append((hop, 1))
    out: list[Command] = []
    yaw = initial_yaw % 360.0
    for (dx, dy, dz), count in runs:
        distance = count * path.resolution
        if dz != 0:
            out.append(move("up" if dz > 0 else "down", distance))
            continue
        heading = _HEADINGS[(dx, dy)]
        delta = (heading - yaw + 180.0) % 360.0 - 180.0
        if abs(delta) > 1e-9:
            out.append(rotate(delta))
            yaw = heading
        out.append(move("forward", distance))
    return out
