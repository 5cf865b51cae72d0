// Browser wiring: one session, one event stream, pure renders on top.

import { GatewayClient, GatewayError } from "./client.js";
import { GatewayEvent, reportOf, telemetryOf } from "./events.js";
import { ChatModel, reduceChat } from "./chat.js";
import { buildTrajectoryView, piecePath } from "./trajectory.js";

const state = {
    client: new GatewayClient(location.origin.replace(/\/$/, "")),
    sessionId: "",
    events: [] as GatewayEvent[],
};

function $(id: string): HTMLElement {
    const el = document.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el;
}

function renderChat(model: ChatModel) {
    const log = $("chat");
    log.innerHTML = "";
    for (const turn of model.turns) {
        const div = document.createElement("div");
        div.className = `turn ${turn.role}`;
        const badge = document.createElement("span");
        badge.className = "badge";
        badge.textContent = turn.role;
        const body = document.createElement("pre");
        body.textContent = turn.text;
        div.append(badge, body);
        log.append(div);
    }
    log.scrollTop = log.scrollHeight;
    ($("send") as HTMLButtonElement).disabled = model.busy || model.closed;
    $("banner").textContent = model.needsResync
        ? "stream out of order — resyncing"
        : model.closed
        ? "session closed"
        : model.busy
        ? "flying…"
        : "";
    if (model.needsResync) resync();
}

function renderTrajectory(events: GatewayEvent[]) {
    const report = reportOf(events);
    const view = buildTrajectoryView(
        telemetryOf(events),
        report?.spr ?? [],
        report?.efficiency ?? [],
    );
    const svg = $("trajectory");
    svg.innerHTML = "";
    $("pending").style.display = view.pending ? "block" : "none";
    for (const piece of view.pieces) {
        const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
        path.setAttribute("d", piecePath(piece));
        path.setAttribute("stroke", piece.color);
        path.setAttribute("fill", "none");
        path.setAttribute("stroke-width", "2.5");
        svg.append(path);
    }
    const strip = $("altitude");
    strip.innerHTML = "";
    for (const piece of view.pieces) {
        const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
        path.setAttribute(
            "d",
            piece.altitude
                .map(([t, z], i) => `${i === 0 ? "M" : "L"}${(t * 4).toFixed(1)},${(40 - z * 10).toFixed(1)}`)
                .join(" "),
        );
        path.setAttribute("stroke", piece.color);
        path.setAttribute("fill", "none");
        strip.append(path);
    }
}

function rerender() {
    renderChat(reduceChat(state.events));
    renderTrajectory(state.events);
}

async function resync() {
    const session = await state.client.getSession(state.sessionId);
    state.events = session.transcript;
    rerender();
    followFrom(state.events.length ? state.events[state.events.length - 1].seq + 1 : 0);
}

function followFrom(seq: number) {
    state.client
        .streamEvents(
            state.sessionId,
            (event) => {
                state.events.push(event);
                rerender();
            },
            { since: seq, follow: true },
        )
        .catch(() => setTimeout(() => resync(), 1000));   // reconnect politely
}

async function main() {
    const world = new URLSearchParams(location.search).get("world") ?? "apartment";
    const session = await state.client.openSession(world);
    state.sessionId = session.id;
    $("title").textContent = `dronelang console — ${world} (${session.id})`;
    followFrom(0);

    $("send").addEventListener("click", submit);
    ($("input") as HTMLInputElement).addEventListener("keydown", (event) => {
        if (event.key === "Enter") submit();
    });
    $("abort").addEventListener("click", () => {
        state.client.abort(state.sessionId).catch(() => undefined);
    });

    async function submit() {
        const input = $("input") as HTMLInputElement;
        const text = input.value.trim();
        if (!text) return;
        try {
            await state.client.sendUtterance(state.sessionId, text);
            input.value = "";
        } catch (error) {
            if (error instanceof GatewayError && error.status === 409) {
                $("banner").textContent = "busy — wait for the current run";
                return;   // keep the input so nothing is lost
            }
            throw error;
        }
    }
}

main().catch((error) => {
    $("banner").textContent = String(error);
});
