// DOM wiring: stream -> view model -> charts, forms -> command client.
//
// Analyst mode (?mode=analyst) skips the live stream and renders a finished
// run purely from /state + /history with the same components.

import { CommandClient, ValidationError } from "./commands.js";
import { drawChart } from "./charts.js";
import { TelemetryStream } from "./stream.js";
import { StateSnapshot, TelemetryFrame } from "./types.js";
import { ConsoleViewModel } from "./viewmodel.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("service") ?? "http://127.0.0.1:8008";
const analystMode = params.get("mode") === "analyst";

const vm = new ConsoleViewModel();
const commands = new CommandClient(base, vm);

function el<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
}

function setStatus(text: string, cls: string): void {
    const badge = el<HTMLSpanElement>("status");
    badge.textContent = text;
    badge.className = `badge ${cls}`;
}

function render(): void {
    const powerCanvas = el<HTMLCanvasElement>("chart-power");
    drawChart(
        powerCanvas,
        [
            { points: vm.series.r.toArray(), color: "#999", label: "requested" },
            { points: vm.series.v.toArray(), color: "#1f77b4", label: "admitted" },
        ],
        [],
        { lo: vm.series.band_lo.toArray(), hi: vm.series.band_hi.toArray() },
        vm.interventions.toArray(),
    );

    const tsinBound = vm.constraintBound("T_s_in");
    drawChart(
        el<HTMLCanvasElement>("chart-tsin"),
        [
            { points: vm.series.T_s_in_raw.toArray(), color: "#ddd", label: "raw" },
            { points: vm.series.T_s_in.toArray(), color: "#d62728", label: "T_s_in" },
        ],
        tsinBound === null ? [] : [{ value: tsinBound, color: "#d62728", label: "floor" }],
    );

    const tsoutBound = vm.constraintBound("T_s_out");
    drawChart(
        el<HTMLCanvasElement>("chart-tsout"),
        [
            { points: vm.series.T_s_out_raw.toArray(), color: "#ddd", label: "raw" },
            { points: vm.series.T_s_out.toArray(), color: "#2ca02c", label: "T_s_out" },
        ],
        tsoutBound === null ? [] : [{ value: tsoutBound, color: "#2ca02c", label: "cap" }],
    );

    drawChart(el<HTMLCanvasElement>("chart-kappa"),
              [{ points: vm.series.kappa.toArray(), color: "#9467bd", label: "kappa" }]);

    el<HTMLSpanElement>("gov-badge").textContent =
        vm.governorEnabled ? "governor ON" : "governor BYPASSED";
    el<HTMLSpanElement>("drop-counter").textContent =
        `dropped ${vm.droppedFrames} / malformed ${vm.malformedFrames}`;

    const rows = vm.ledger.slice(-8).reverse().map((entry) => {
        const where = entry.appliedAtTick === null ? "" : ` @ tick ${entry.appliedAtTick}`;
        const err = entry.error ? ` (${entry.error})` : "";
        return `<li class="${entry.state}">#${entry.seq} ${entry.kind} ${entry.summary}` +
               ` &mdash; ${entry.state}${where}${err}</li>`;
    });
    el<HTMLUListElement>("ledger").innerHTML = rows.join("");
}

async function reconstruct(): Promise<void> {
    const snapshot = (await (await fetch(`${base}/state`)).json()) as StateSnapshot;
    const history = (await (await fetch(`${base}/history?from=0`)).json())
        .frames as TelemetryFrame[];
    const rebuilt = ConsoleViewModel.reconstruct(snapshot, history, vm.capacity);
    Object.assign(vm, rebuilt);   // adopt the rebuilt buffers wholesale
    render();
}

function wireForms(): void {
    el<HTMLButtonElement>("btn-load").onclick = async () => {
        const target = Number(el<HTMLInputElement>("input-load").value);
        await guarded(() => commands.submit("set-reference", { target_mw: target }));
    };
    el<HTMLButtonElement>("btn-constraint").onclick = async () => {
        const bound = Number(el<HTMLInputElement>("input-bound").value);
        const output = el<HTMLSelectElement>("input-output").value;
        await guarded(() => commands.submit("update-constraint", { output, bound }));
    };
    el<HTMLButtonElement>("btn-governor").onclick = async () => {
        await guarded(() => commands.submit("toggle-governor",
                                            { enabled: !vm.governorEnabled }));
    };
    el<HTMLButtonElement>("btn-refresh").onclick = () => void reconstruct();
}

async function guarded(go: () => Promise<unknown>): Promise<void> {
    const box = el<HTMLSpanElement>("form-error");
    box.textContent = "";
    try {
        await go();
    } catch (err) {
        box.textContent = err instanceof ValidationError
            ? `rejected locally: ${err.message}`
            : String(err);
    }
    render();
}

async function start(): Promise<void> {
    wireForms();
    await reconstruct();   // a refresh mid-run reconstructs before streaming
    if (analystMode) {
        setStatus("analyst (replay)", "stale");
        return;
    }
    const stream = new TelemetryStream(`${base}/stream`, {
        onFrame: (frame) => {
            vm.ingest(frame);
            render();
        },
        onStatus: (status) => {
            vm.status = status;
            setStatus(status, status === "live" ? "live" : "stale");
        },
    });
    stream.start();
}

void start();
