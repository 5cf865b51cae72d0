import { describe, expect, it } from "vitest";

import { EfficiencySegment, SprWindow, TelemetrySample } from "../src/events.js";
import { buildTrajectoryView, piecePath, windowColor } from "../src/trajectory.js";

function cruise(seconds: number, dtStep = 0.1): TelemetrySample[] {
    const samples: TelemetrySample[] = [];
    for (let t = dtStep; t <= seconds + 1e-9; t += dtStep) {
        samples.push({ t: Number(t.toFixed(3)), x: t, y: 0, z: 1, yaw: 0 });
    }
    return samples;
}

function win(index: number, spr: number): SprWindow {
    return { index, spr, speed: spr * 100, energy: 100 };
}

describe("buildTrajectoryView", () => {
    it("constant SPR renders a single-color polyline", () => {
        const windows = [0, 1, 2, 3].map((i) => win(i, 0.01));
        const segments: EfficiencySegment[] = [
            { start: 0, stop: 4, label: "high", shades: [0.25, 0.5, 0.75, 1] },
        ];
        const view = buildTrajectoryView(cruise(8), windows, segments);
        expect(view.pending).toBe(false);
        expect(view.pieces).toHaveLength(4);
        expect(new Set(view.pieces.map((p) => p.label))).toEqual(new Set(["high"]));
    });

    it("increasing SPR over 4 windows splits red-then-green at the median", () => {
        // mirrors the energy module's median split: first two windows low,
        // last two high
        const windows = [0.01, 0.02, 0.03, 0.04].map((s, i) => win(i, s));
        const segments: EfficiencySegment[] = [
            { start: 0, stop: 2, label: "low", shades: [1, 0.5] },
            { start: 2, stop: 4, label: "high", shades: [0.5, 1] },
        ];
        const view = buildTrajectoryView(cruise(8), windows, segments);
        expect(view.pieces.map((p) => p.label)).toEqual(["low", "low", "high", "high"]);
        // red first, green after the boundary
        expect(view.pieces[0].color).toContain("hsl(0,");
        expect(view.pieces[3].color).toContain("hsl(120,");
        // the split lands exactly at the window boundary t = 4 s
        const lastLow = view.pieces[1].points.at(-1)!;
        const firstHigh = view.pieces[2].points[0];
        expect(lastLow[0]).toBeCloseTo(4.0, 5);
        expect(firstHigh[0]).toBeCloseTo(4.0, 5);
    });

    it("no telemetry renders an empty pending canvas", () => {
        const view = buildTrajectoryView([], [], []);
        expect(view.pending).toBe(true);
        expect(view.pieces).toEqual([]);
    });

    it("shade darkens the color within a class", () => {
        const light = windowColor("low", 0.1);
        const dark = windowColor("low", 0.9);
        const lightness = (c: string) => Number(c.match(/(\d+)%\)$/)![1]);
        expect(lightness(dark)).toBeLessThan(lightness(light));
    });

    it("piecePath emits a connected SVG path", () => {
        const view = buildTrajectoryView(cruise(2), [win(0, 0.01)], [
            { start: 0, stop: 1, label: "high", shades: [1] },
        ]);
        const d = piecePath(view.pieces[0]);
        expect(d.startsWith("M")).toBe(true);
        expect(d.split("L").length).toBeGreaterThan(5);
    });
});
