// Chat view model: a pure reduction of the event stream. Rendering never
// mutates pipeline state; replaying the same events rebuilds the same view.

import { GatewayEvent, Role } from "./events.js";

export interface ChatTurn {
    role: Role;
    kind: string;
    text: string;
    seq: number;
}

export interface ChatModel {
    turns: ChatTurn[];
    busy: boolean;
    closed: boolean;
    needsResync: boolean;
}

function describe(event: GatewayEvent): string | null {
    const p = event.payload;
    switch (event.kind) {
        case "user":
            return p.text;
        case "system":
            return "session ready";
        case "label": {
            const f = p.features;
            return (
                `classified ${p.code} (${p.complexity}, ${p.autonomy}) — ` +
                `points=${f.monitor_points} dangers=${f.danger_regions} ` +
                `actions=${f.action_count}, score ${p.score.total} vs θ=${p.threshold}`
            );
        }
        case "plan":
            return p.steps
                .map((s: any, i: number) => `${i + 1}. ${s.description}`)
                .join("\n");
        case "decision":
            return p.mode === "direct"
                ? "executing directly"
                : "tool bindings: " +
                  p.bindings.map((b: any) => `step ${b.step} → ${b.tool}`).join(", ");
        case "segment": {
            const n = p.commands.length;
            return p.ok
                ? `segment ok (${n} command${n === 1 ? "" : "s"})`
                : `segment failed: ${p.cause}`;
        }
        case "report":
            if (p.aborted) return "run aborted";
            return p.ok
                ? `done — flight ${p.flight_time_s.toFixed(1)} s, ` +
                  `${p.energy_j.toFixed(0)} J, ${p.photos} photo(s)`
                : `failed: ${p.failure}`;
        case "error":
            return `error: ${p.message}`;
        case "aborted":
            return "aborted";
        case "closed":
            return "session closed";
        case "telemetry":
        case "clear":
            return null;   // not chat turns
        default:
            return null;
    }
}

export function reduceChat(events: GatewayEvent[]): ChatModel {
    const model: ChatModel = { turns: [], busy: false, closed: false, needsResync: false };
    let lastT = -Infinity;
    for (const event of events) {
        if (event.t < lastT) {
            // monotonicity broken: the view is stale, ask for a resync
            model.needsResync = true;
            model.turns = [];
            return model;
        }
        lastT = event.t;
        if (event.kind === "clear") {
            model.turns = [];
            continue;
        }
        if (event.kind === "closed") {
            model.closed = true;
        }
        const text = describe(event);
        if (text !== null) {
            model.turns.push({ role: event.role, kind: event.kind, text, seq: event.seq });
        }
        if (event.kind === "user") model.busy = true;
        if (event.kind === "report" || event.kind === "error") model.busy = false;
    }
    return model;
}
