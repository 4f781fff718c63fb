// The console's single source of view truth.
//
// Holds bounded time-series buffers fed from the telemetry stream, the last
// acknowledged constraint schedule, the governor intervention flags and the
// pending-command ledger. Stateless with respect to the run itself: feeding
// it /state + /history reproduces exactly the view a live stream would have
// built, which is what makes a browser refresh safe mid-run.

import { Ring } from "./ring.js";
import { ConstraintLine, StateSnapshot, TelemetryFrame } from "./types.js";

export interface SeriesPoint {
    tick: number;
    t: number;
    value: number;
}

export type ConnectionStatus = "connecting" | "live" | "stale" | "closed";

export interface LedgerEntry {
    seq: number;
    kind: string;
    summary: string;
    state: "pending" | "acknowledged" | "rejected";
    appliedAtTick: number | null;
    error: string | null;
}

const SERIES = [
    "r", "v", "kappa", "T_s_in", "T_s_out", "T_s_in_raw", "T_s_out_raw",
    "band_lo", "band_hi", "power",
] as const;
export type SeriesName = (typeof SERIES)[number];

export class ConsoleViewModel {
    readonly series: Record<SeriesName, Ring<SeriesPoint>>;
    readonly interventions = new Ring<SeriesPoint>(512);   // ticks with kappa < 1
    constraints: ConstraintLine[] = [];
    governorEnabled = true;
    alarm = false;
    status: ConnectionStatus = "connecting";
    lastTick = -1;
    droppedFrames = 0;
    malformedFrames = 0;
    readonly ledger: LedgerEntry[] = [];

    constructor(readonly capacity = 4096) {
        this.series = Object.fromEntries(
            SERIES.map((name) => [name, new Ring<SeriesPoint>(capacity)]),
        ) as Record<SeriesName, Ring<SeriesPoint>>;
    }

    // ---------------------------------------------------------------- //
    // telemetry ingestion
    // ---------------------------------------------------------------- //

    ingest(frame: unknown): boolean {
        if (!isTelemetryFrame(frame)) {
            this.malformedFrames += 1;
            return false;
        }
        if (frame.tick <= this.lastTick) {
            return false;   // duplicate or outdated frame after a reconnect
        }
        if (this.lastTick >= 0 && frame.tick > this.lastTick + 1) {
            this.droppedFrames += frame.tick - this.lastTick - 1;
        }
        this.lastTick = frame.tick;

        const point = (value: number): SeriesPoint =>
            ({ tick: frame.tick, t: frame.t, value });
        this.series.r.push(point(frame.governor.r));
        this.series.v.push(point(frame.governor.v));
        this.series.kappa.push(point(frame.governor.kappa));
        this.series.power.push(point(frame.power_mw));
        this.series.T_s_in.push(point(frame.states.denoised["T_s_in"]));
        this.series.T_s_out.push(point(frame.states.denoised["T_s_out"]));
        this.series.T_s_in_raw.push(point(frame.states.raw["T_s_in"]));
        this.series.T_s_out_raw.push(point(frame.states.raw["T_s_out"]));
        if (frame.governor.band) {
            this.series.band_lo.push(point(frame.governor.band[0]));
            this.series.band_hi.push(point(frame.governor.band[1]));
        }
        if (frame.governor.kappa < 1.0 && frame.governor.enabled) {
            this.interventions.push(point(frame.governor.kappa));
        }
        this.constraints = frame.constraints;
        this.governorEnabled = frame.governor.enabled;
        this.alarm = frame.governor.alarm;
        return true;
    }

    constraintBound(output: string): number | null {
        const row = this.constraints.find((c) => c.output === output);
        return row ? row.bound : null;
    }

    // ---------------------------------------------------------------- //
    // command ledger
    // ---------------------------------------------------------------- //

    notePending(seq: number, kind: string, summary: string): void {
        this.ledger.push({ seq, kind, summary, state: "pending",
                           appliedAtTick: null, error: null });
    }

    noteAcknowledged(seq: number, appliedAtTick: number): void {
        const entry = this.ledger.find((e) => e.seq === seq);
        if (entry) {
            entry.state = "acknowledged";
            entry.appliedAtTick = appliedAtTick;
        }
    }

    noteRejected(seq: number, error: string): void {
        const entry = this.ledger.find((e) => e.seq === seq);
        if (entry) {
            entry.state = "rejected";
            entry.error = error;
        }
    }

    // ---------------------------------------------------------------- //
    // reconstruction (refresh path)
    // ---------------------------------------------------------------- //

    static reconstruct(snapshot: StateSnapshot, history: TelemetryFrame[],
                       capacity = 4096): ConsoleViewModel {
        const vm = new ConsoleViewModel(capacity);
        const frames = history
            .slice()
            .sort((a, b) => a.tick - b.tick);
        for (const frame of frames) {
            vm.ingest(frame);
        }
        if (snapshot.frame) {
            vm.ingest(snapshot.frame);
        }
        vm.status = snapshot.finished ? "closed" : "live";
        return vm;
    }

    seriesValues(name: SeriesName): number[] {
        return this.series[name].toArray().map((p) => p.value);
    }

    seriesTicks(name: SeriesName): number[] {
        return this.series[name].toArray().map((p) => p.tick);
    }
}

export function isTelemetryFrame(obj: unknown): obj is TelemetryFrame {
    if (typeof obj !== "object" || obj === null) return false;
    const f = obj as Record<string, unknown>;
    if (typeof f.tick !== "number" || typeof f.t !== "number") return false;
    const gov = f.governor as Record<string, unknown> | undefined;
    if (!gov || typeof gov.r !== "number" || typeof gov.v !== "number"
        || typeof gov.kappa !== "number") return false;
    const states = f.states as Record<string, unknown> | undefined;
    if (!states || typeof states.raw !== "object"
        || typeof states.denoised !== "object") return false;
    if (!Array.isArray(f.constraints)) return false;
    return true;
}
