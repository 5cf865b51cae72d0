// Thin fetch client for the gateway endpoints. The console holds no
// authority: every action is a request, every fact arrives as an event.

import { GatewayEvent, SseParser, parseEvent } from "./events.js";

export interface SessionInfo {
    id: string;
    world: string;
    prompt_style: string;
    backend: string;
    state: string;
    events: number;
}

export class GatewayError extends Error {
    constructor(public status: number, message: string) {
        super(message);
    }
}

async function expect(response: Response): Promise<any> {
    if (!response.ok) {
        const body = await response.text();
        throw new GatewayError(response.status, body || response.statusText);
    }
    return response.json();
}

export class GatewayClient {
    constructor(public baseUrl: string) {}

    async openSession(world: string, promptStyle = "EIP", backend = "reference"):
        Promise<SessionInfo> {
        const response = await fetch(`${this.baseUrl}/sessions`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({ world, prompt_style: promptStyle, backend }),
        });
        return expect(response);
    }

    async getSession(sid: string): Promise<SessionInfo & { transcript: GatewayEvent[] }> {
        const body = await expect(await fetch(`${this.baseUrl}/sessions/${sid}`));
        body.transcript = body.transcript.map(parseEvent);
        return body;
    }

    async sendUtterance(sid: string, text: string): Promise<any> {
        const response = await fetch(`${this.baseUrl}/sessions/${sid}/utterances`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({ text }),
        });
        return expect(response);
    }

    async abort(sid: string): Promise<any> {
        return expect(
            await fetch(`${this.baseUrl}/sessions/${sid}/abort`, { method: "POST" }),
        );
    }

    // Stream events; stop when the callback returns false or the stream ends.
    async streamEvents(
        sid: string,
        onEvent: (event: GatewayEvent) => boolean | void,
        options: { since?: number; follow?: boolean } = {},
    ): Promise<void> {
        const since = options.since ?? 0;
        const follow = options.follow ?? true;
        const response = await fetch(
            `${this.baseUrl}/sessions/${sid}/events?since=${since}&follow=${follow}`,
        );
        if (!response.ok || !response.body) {
            throw new GatewayError(response.status, "event stream unavailable");
        }
        const reader = response.body.getReader();
        const decoder = new TextDecoder();
        const parser = new SseParser();
        try {
            while (true) {
                const { done, value } = await reader.read();
                if (done) return;
                for (const event of parser.push(decoder.decode(value, { stream: true }))) {
                    if (onEvent(event) === false) return;
                }
            }
        } finally {
            reader.cancel().catch(() => undefined);
        }
    }
}
