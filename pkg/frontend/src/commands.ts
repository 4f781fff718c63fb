// Operator command client: validation, sequence numbering, dedup, ledger.

import {
    CommandAck, CommandKind, CONSTRAINT_BOUNDS_C, REFERENCE_BOUNDS_MW,
} from "./types.js";
import { ConsoleViewModel } from "./viewmodel.js";

export class ValidationError extends Error {}

export class CommandClient {
    private seq = 0;
    // one command per user action: an action id maps to exactly one seq
    private readonly sentActions = new Map<string, number>();

    constructor(
        private readonly baseUrl: string,
        private readonly vm: ConsoleViewModel,
        private readonly client = `console-${Math.random().toString(36).slice(2, 10)}`,
    ) {}

    validate(kind: CommandKind, payload: Record<string, unknown>): void {
        if (kind === "set-reference") {
            const target = payload.target_mw;
            if (typeof target !== "number" || !isFinite(target)) {
                throw new ValidationError("load request must be a number");
            }
            const [lo, hi] = REFERENCE_BOUNDS_MW;
            if (target < lo || target > hi) {
                throw new ValidationError(`load request outside [${lo}, ${hi}] MW`);
            }
        } else if (kind === "update-constraint") {
            const bound = payload.bound;
            if (typeof bound !== "number" || !isFinite(bound)) {
                throw new ValidationError("constraint bound must be a number");
            }
            const [lo, hi] = CONSTRAINT_BOUNDS_C;
            if (bound < lo || bound > hi) {
                throw new ValidationError(`constraint bound outside [${lo}, ${hi}] degC`);
            }
            if (typeof payload.output !== "string") {
                throw new ValidationError("constraint output name missing");
            }
        } else if (kind === "toggle-governor") {
            if (typeof payload.enabled !== "boolean") {
                throw new ValidationError("governor toggle needs a boolean");
            }
        }
    }

    /** Submit one user action; repeated calls with the same actionId reuse
     *  the original sequence number and do not POST again. */
    async submit(kind: CommandKind, payload: Record<string, unknown>,
                 actionId?: string): Promise<CommandAck> {
        this.validate(kind, payload);
        const key = actionId ?? `${kind}:${JSON.stringify(payload)}:${this.seq}`;
        const existing = this.sentActions.get(key);
        if (existing !== undefined) {
            throw new ValidationError(`action already submitted (seq ${existing})`);
        }
        this.seq += 1;
        const seq = this.seq;
        this.sentActions.set(key, seq);
        this.vm.notePending(seq, kind, JSON.stringify(payload));

        const resp = await fetch(`${this.baseUrl}/command`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ kind, payload, client: this.client, seq }),
        });
        const body = await resp.json();
        if (!resp.ok) {
            this.vm.noteRejected(seq, String(body.error ?? resp.status));
            throw new Error(`command rejected (${resp.status}): ${body.error}`);
        }
        const ack = body as CommandAck;
        this.vm.noteAcknowledged(seq, ack.will_apply_at_tick);
        return ack;
    }
}
