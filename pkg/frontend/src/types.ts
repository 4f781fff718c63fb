// Wire types mirroring the service's /schema document (schema_version 1).

export interface GovernorFrame {
    r: number;
    v: number;
    kappa: number;
    band: [number, number] | null;
    binding: string;
    alarm: boolean;
    enabled: boolean;
}

export interface ConstraintLine {
    output: string;
    sense: "le" | "ge";
    bound: number;
}

export interface TelemetryFrame {
    schema_version: number;
    tick: number;
    t: number;
    states: {
        raw: Record<string, number>;
        denoised: Record<string, number>;
    };
    governor: GovernorFrame;
    constraints: ConstraintLine[];
    power_mw: number;
}

export type CommandKind =
    | "set-reference"
    | "update-constraint"
    | "toggle-governor"
    | "pause"
    | "resume"
    | "set-speed";

export interface CommandMessage {
    kind: CommandKind;
    payload: Record<string, unknown>;
    client: string;
    seq: number;
}

export interface CommandAck {
    accepted: boolean;
    kind: string;
    seq: number | null;
    will_apply_at_tick: number;
}

export interface StateSnapshot {
    tick: number;
    paused: boolean;
    finished: boolean;
    fault: string | null;
    frame: TelemetryFrame | null;
    schema_version: number;
}

// numeric input bounds from the command schema; mirrored client-side so a
// form rejects out-of-range values before any request is made
export const REFERENCE_BOUNDS_MW: [number, number] = [64.0, 320.0];
export const CONSTRAINT_BOUNDS_C: [number, number] = [300.0, 600.0];
