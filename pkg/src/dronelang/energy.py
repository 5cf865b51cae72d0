"""Power, energy and flight-efficiency accounting.

Motor level n maps to electrical power by the cubic law P = c * n^3; total
power sums the four motors per sample; energy is the left Riemann sum of
total power. Efficiency is read through the speed-to-power ratio (SPR):
mean speed over each 2 s window divided by the energy spent in it, split
into high/low classes at the per-run median.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import compile_kernel, jit_kernel


class LevelOutOfRange(ValueError):
    pass


class MisalignedStreams(ValueError):
    pass


class ZeroPowerWindow(ValueError):
    pass


@dataclass(frozen=True)
class PowerModel:
    """Watts drawn by one motor at full level; a config value, not physics."""

    full_level_watts: float = 100.0

    def __post_init__(self):
        if self.full_level_watts <= 0:
            raise ValueError("power coefficient must be > 0")


def motor_power(level, model: PowerModel = PowerModel()):
    """Cubic speed-to-power law for a single motor (scalar or array)."""
    arr = np.asarray(level, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise LevelOutOfRange("motor level must lie in [0, 1]")
    out = model.full_level_watts * arr**3
    return float(out) if np.isscalar(level) else out


def _total_power_loop(motors, coefficient):
    n = motors.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        acc = 0.0
        for j in range(4):
            level = motors[i, j]
            acc += coefficient * level * level * level
        out[i] = acc
    return out


total_power_kernel = jit_kernel(_total_power_loop)
total_power_kernel_compiled = compile_kernel(_total_power_loop)


def total_power_numpy(motors: np.ndarray, coefficient: float) -> np.ndarray:
    return coefficient * np.sum(motors**3, axis=1)


def total_power(outputs, model: PowerModel = PowerModel()) -> np.ndarray:
    """Per-sample sum of the four motor powers.

    Accepts an (n, 4) array or a sequence of four aligned streams; raises
    MisalignedStreams when the four streams disagree in length.
    """
    if isinstance(outputs, np.ndarray) and outputs.ndim == 2:
        motors = outputs
    else:
        streams = [np.asarray(s, dtype=float) for s in outputs]
        if len(streams) != 4:
            raise MisalignedStreams("expected exactly four motor streams")
        lengths = {len(s) for s in streams}
        if len(lengths) > 1:
            raise MisalignedStreams(f"stream lengths differ: {sorted(lengths)}")
        motors = np.column_stack(streams) if streams[0].size else np.zeros((0, 4))
    if motors.shape[1] != 4:
        raise MisalignedStreams("expected four motor columns")
    if motors.size and (motors.min() < 0.0 or motors.max() > 1.0):
        raise LevelOutOfRange("motor level must lie in [0, 1]")
    motors = np.ascontiguousarray(motors, dtype=np.float64)
    return total_power_kernel(motors, model.full_level_watts)


def integrate_energy(power: np.ndarray, dt: float) -> float:
    """Left Riemann sum of the total-power stream, in joules."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    power = np.asarray(power, dtype=float)
    return float(power.sum() * dt)


@dataclass(frozen=True)
class SprWindow:
    index: int
    t_start: float
    t_end: float
    speed: float       # |mean displacement| / window span, m/s
    energy: float      # joules spent inside the window
    spr: float         # speed / energy, (m/s)/J


def _window_sums_loop(power, per, count):
    out = np.empty(count, dtype=np.float64)
    for w in range(count):
        acc = 0.0
        base = w * per
        for i in range(per):
            acc += power[base + i]
        out[w] = acc
    return out


window_sums_kernel = jit_kernel(_window_sums_loop)
window_sums_kernel_compiled = compile_kernel(_window_sums_loop)


def window_sums_numpy(power: np.ndarray, per: int, count: int) -> np.ndarray:
    return power[: per * count].reshape(count, per).sum(axis=1)


def spr_windows(
    trajectory: np.ndarray,
    power: np.ndarray,
    dt: float,
    window: float = 2.0,
) -> list[SprWindow]:
    """Speed-to-power ratio over consecutive non-overlapping windows.

    `trajectory` carries (t, x, y, z, ...) rows aligned with the power
    stream; a trailing partial window is dropped. Raises ZeroPowerWindow if
    a window spends no energy (cannot happen for airborne flight, guards
    externally ingested logs).
    """
    trajectory = np.asarray(trajectory, dtype=float)
    power = np.asarray(power, dtype=float)
    if trajectory.shape[0] != power.shape[0]:
        raise MisalignedStreams("trajectory and power streams differ in length")
    per = int(round(window / dt))
    if per <= 0 or abs(per * dt - window) > 1e-9:
        raise ValueError("window must be a multiple of dt")
    count = power.shape[0] // per
    if count == 0:
        return []
    sums = window_sums_kernel(np.ascontiguousarray(power), per, count)
    # positions are left-sampled, so a window's first and last samples span
    # (per - 1) ticks; dividing by that span makes constant-velocity speed exact
    span = (per - 1) * dt if per > 1 else dt
    out = []
    for w in range(count):
        lo = w * per
        hi = lo + per - 1
        start_pos = trajectory[lo, 1:4]
        end_pos = trajectory[hi, 1:4]
        speed = float(np.linalg.norm(end_pos - start_pos)) / span
        energy = float(sums[w] * dt)
        if energy <= 0.0:
            raise ZeroPowerWindow(f"window {w} spends no energy")
        out.append(
            SprWindow(
                index=w,
                t_start=float(trajectory[lo, 0]),
                t_end=float(trajectory[hi, 0]),
                speed=speed,
                energy=energy,
                spr=speed / energy,
            )
        )
    return out


@dataclass(frozen=True)
class EfficiencySegment:
    start: int               # first window index
    stop: int                # past-the-end window index
    label: str               # "high" | "low"
    shade: float             # mean of the member window shades
    window_shades: tuple[float, ...]


def classify_efficiency(windows: list[SprWindow]) -> list[EfficiencySegment]:
    """Median split into high/low efficiency with rank-normalized shading.

    A window is high exactly when its SPR is >= the run median (ties go
    high). Within each class, shade grows with rank distance from the
    median, so the extremes draw darkest. Adjacent same-class windows merge
    into one segment.
    """
    if not windows:
        raise ValueError("need at least one window")
    values = np.array([w.spr for w in windows])
    median = float(np.median(values))
    labels = ["high" if v >= median else "low" for v in values]

    shades = [0.0] * len(windows)
    for label in ("high", "low"):
        members = [i for i, l in enumerate(labels) if l == label]
        if not members:
            continue
        ordered = sorted(members, key=lambda i: (abs(values[i] - median), i))
        for rank, i in enumerate(ordered):
            shades[i] = (rank + 1) / len(members)

    segments: list[EfficiencySegment] = []
    start = 0
    for i in range(1, len(windows) + 1):
        if i == len(windows) or labels[i] != labels[start]:
            member_shades = tuple(shades[start:i])
            segments.append(
                EfficiencySegment(
                    start=start,
                    stop=i,
                    label=labels[start],
                    shade=float(np.mean(member_shades)),
                    window_shades=member_shades,
                )
            )
            start = i
    return segments
