// Gateway event schema and the SSE wire parsing.

export type Role = "user" | "planner" | "executor" | "system";

export interface GatewayEvent {
    seq: number;
    t: number;
    role: Role;
    kind: string;
    payload: any;
}

export interface TelemetrySample {
    t: number;
    x: number;
    y: number;
    z: number;
    yaw: number;
}

export interface SprWindow {
    index: number;
    spr: number;
    speed: number;
    energy: number;
}

export interface EfficiencySegment {
    start: number;   // first window index
    stop: number;    // past-the-end window index
    label: "high" | "low";
    shades: number[];
}

export interface RunReport {
    ok: boolean;
    aborted: boolean;
    failure: string | null;
    flight_time_s: number;
    energy_j: number;
    photos: number;
    spr: SprWindow[];
    efficiency: EfficiencySegment[];
}

export function parseEvent(raw: unknown): GatewayEvent {
    const e = raw as Record<string, unknown>;
    if (
        typeof e !== "object" || e === null ||
        typeof e.seq !== "number" || typeof e.t !== "number" ||
        typeof e.role !== "string" || typeof e.kind !== "string"
    ) {
        throw new Error(`malformed gateway event: ${JSON.stringify(raw)}`);
    }
    return {
        seq: e.seq,
        t: e.t,
        role: e.role as Role,
        kind: e.kind,
        payload: (e as any).payload ?? {},
    };
}

// Incremental parser for text/event-stream bodies: feed chunks, collect
// complete `data:` records.
export class SseParser {
    private buffer = "";

    push(chunk: string): GatewayEvent[] {
        this.buffer += chunk;
        const events: GatewayEvent[] = [];
        let index: number;
        while ((index = this.buffer.indexOf("\n\n")) >= 0) {
            const record = this.buffer.slice(0, index);
            this.buffer = this.buffer.slice(index + 2);
            for (const line of record.split("\n")) {
                if (line.startsWith("data: ")) {
                    events.push(parseEvent(JSON.parse(line.slice(6))));
                }
            }
        }
        return events;
    }
}

export function telemetryOf(events: GatewayEvent[]): TelemetrySample[] {
    const samples: TelemetrySample[] = [];
    for (const event of events) {
        if (event.kind === "telemetry") {
            samples.push(...(event.payload.samples as TelemetrySample[]));
        }
    }
    return samples;
}

export function reportOf(events: GatewayEvent[]): RunReport | null {
    for (let i = events.length - 1; i >= 0; i--) {
        if (events[i].kind === "report") return events[i].payload as RunReport;
    }
    return null;
}
