// SPR-colored trajectory: split the flight polyline at the 2 s window
// boundaries, green for high-efficiency windows, red for low, darker with
// distance from the run median. Top-down projection with the altitude as a
// separate strip (bundled worlds are single-floor).

import { EfficiencySegment, SprWindow, TelemetrySample } from "./events.js";

export const WINDOW_SECONDS = 2;

export interface ColoredPiece {
    window: number;
    label: "high" | "low";
    shade: number;           // 0..1, darker = farther from the median
    color: string;
    points: Array<[number, number]>;   // x, y in meters
    altitude: Array<[number, number]>; // t, z
}

export interface TrajectoryView {
    pieces: ColoredPiece[];
    pending: boolean;        // no telemetry yet
}

export function windowColor(label: "high" | "low", shade: number): string {
    // lightness falls with shade so extremes draw darkest
    const lightness = Math.round(72 - 40 * Math.min(Math.max(shade, 0), 1));
    const hue = label === "high" ? 120 : 0;
    return `hsl(${hue}, 65%, ${lightness}%)`;
}

function labelOf(windowIndex: number, segments: EfficiencySegment[]):
    { label: "high" | "low"; shade: number } {
    for (const segment of segments) {
        if (windowIndex >= segment.start && windowIndex < segment.stop) {
            return {
                label: segment.label,
                shade: segment.shades[windowIndex - segment.start] ?? 0.5,
            };
        }
    }
    return { label: "high", shade: 0.5 };
}

export function buildTrajectoryView(
    telemetry: TelemetrySample[],
    windows: SprWindow[],
    segments: EfficiencySegment[],
): TrajectoryView {
    if (telemetry.length === 0) {
        return { pieces: [], pending: true };
    }
    const count = windows.length;
    const pieces: ColoredPiece[] = [];
    for (let w = 0; w < count; w++) {
        const t0 = w * WINDOW_SECONDS;
        const t1 = (w + 1) * WINDOW_SECONDS;
        const last = w === count - 1;
        // boundary samples belong to both neighbours so the polyline connects
        const inside = telemetry.filter(
            (s) => s.t >= t0 && (last ? true : s.t <= t1),
        );
        if (inside.length === 0) continue;
        const { label, shade } = labelOf(w, segments);
        pieces.push({
            window: w,
            label,
            shade,
            color: windowColor(label, shade),
            points: inside.map((s) => [s.x, s.y]),
            altitude: inside.map((s) => [s.t, s.z]),
        });
    }
    if (pieces.length === 0) {
        // no SPR windows (short flight): one neutral piece
        pieces.push({
            window: 0,
            label: "high",
            shade: 0,
            color: windowColor("high", 0),
            points: telemetry.map((s) => [s.x, s.y]),
            altitude: telemetry.map((s) => [s.t, s.z]),
        });
    }
    return { pieces, pending: false };
}

// SVG path strings for a simple, dependency-free canvas.
export function piecePath(piece: ColoredPiece, scale = 10): string {
    return piece.points
        .map(([x, y], i) => `${i === 0 ? "M" : "L"}${(x * scale).toFixed(1)},${(y * scale).toFixed(1)}`)
        .join(" ");
}
