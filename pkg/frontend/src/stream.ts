// Server-sent-events consumer on top of fetch streaming.
//
// Plain EventSource would do in a browser, but reading the byte stream
// directly keeps the parser testable in node and gives us explicit
// reconnect/backoff control. Dropped frames are tolerated by design: the
// view model reconciles by tick index.

export interface StreamEvents {
    onFrame(frame: unknown): void;
    onStatus(status: "connecting" | "live" | "stale" | "closed"): void;
}

export function parseSseChunk(buffer: string): { events: string[]; rest: string } {
    const events: string[] = [];
    let rest = buffer;
    for (;;) {
        const cut = rest.indexOf("\n\n");
        if (cut < 0) break;
        const block = rest.slice(0, cut);
        rest = rest.slice(cut + 2);
        const data = block
            .split("\n")
            .filter((line) => line.startsWith("data: "))
            .map((line) => line.slice(6))
            .join("\n");
        if (data) events.push(data);
    }
    return { events, rest };
}

export class TelemetryStream {
    private stopped = false;
    private attempt = 0;

    constructor(
        private readonly url: string,
        private readonly events: StreamEvents,
        private readonly maxBackoffMs = 10_000,
    ) {}

    start(): void {
        void this.loop();
    }

    stop(): void {
        this.stopped = true;
    }

    private backoff(): number {
        const ms = Math.min(250 * 2 ** this.attempt, this.maxBackoffMs);
        this.attempt += 1;
        return ms;
    }

    private async loop(): Promise<void> {
        while (!this.stopped) {
            this.events.onStatus(this.attempt === 0 ? "connecting" : "stale");
            try {
                const resp = await fetch(this.url);
                if (!resp.ok || !resp.body) throw new Error(`stream HTTP ${resp.status}`);
                this.attempt = 0;
                this.events.onStatus("live");
                const reader = resp.body.getReader();
                const decoder = new TextDecoder();
                let buffer = "";
                for (;;) {
                    const { done, value } = await reader.read();
                    if (done || this.stopped) break;
                    buffer += decoder.decode(value, { stream: true });
                    const { events, rest } = parseSseChunk(buffer);
                    buffer = rest;
                    for (const data of events) {
                        let frame: unknown;
                        try {
                            frame = JSON.parse(data);
                        } catch {
                            frame = data;   // malformed; view model counts it
                        }
                        this.events.onFrame(frame);
                    }
                }
                if (this.stopped) break;
                // orderly end of stream: the run finished
                this.events.onStatus("closed");
                return;
            } catch {
                if (this.stopped) break;
                await sleep(this.backoff());
            }
        }
        this.events.onStatus("closed");
    }
}

function sleep(ms: number): Promise<void> {
    return new Promise((resolve) => setTimeout(resolve, ms));
}
