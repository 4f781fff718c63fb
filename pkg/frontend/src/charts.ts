// Minimal canvas strip charts; no chart library, just lines and bands.

import { SeriesPoint } from "./viewmodel.js";

export interface Trace {
    points: SeriesPoint[];
    color: string;
    label: string;
    dashed?: boolean;
}

export interface HLine {
    value: number;
    color: string;
    label: string;
}

export function drawChart(canvas: HTMLCanvasElement, traces: Trace[],
                          hlines: HLine[] = [],
                          band?: { lo: SeriesPoint[]; hi: SeriesPoint[] },
                          flags: SeriesPoint[] = []): void {
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    const w = canvas.width;
    const h = canvas.height;
    ctx.clearRect(0, 0, w, h);

    const all = traces.flatMap((tr) => tr.points);
    if (band) all.push(...band.lo, ...band.hi);
    if (all.length < 2) return;
    const tMin = Math.min(...all.map((p) => p.t));
    const tMax = Math.max(...all.map((p) => p.t));
    let vMin = Math.min(...all.map((p) => p.value), ...hlines.map((l) => l.value));
    let vMax = Math.max(...all.map((p) => p.value), ...hlines.map((l) => l.value));
    if (vMax === vMin) { vMax += 1; vMin -= 1; }
    const pad = 0.08 * (vMax - vMin);
    vMin -= pad; vMax += pad;

    const px = (t: number) => ((t - tMin) / (tMax - tMin || 1)) * (w - 50) + 42;
    const py = (v: number) => h - 18 - ((v - vMin) / (vMax - vMin)) * (h - 30);

    if (band && band.lo.length > 1) {
        ctx.beginPath();
        band.lo.forEach((p, i) => (i ? ctx.lineTo(px(p.t), py(p.value))
                                     : ctx.moveTo(px(p.t), py(p.value))));
        for (let i = band.hi.length - 1; i >= 0; i--) {
            ctx.lineTo(px(band.hi[i].t), py(band.hi[i].value));
        }
        ctx.closePath();
        ctx.fillStyle = "rgba(100, 150, 240, 0.15)";
        ctx.fill();
    }

    for (const p of flags) {
        ctx.fillStyle = "rgba(240, 160, 40, 0.25)";
        ctx.fillRect(px(p.t) - 1, 12, 2, h - 30);
    }

    for (const line of hlines) {
        ctx.strokeStyle = line.color;
        ctx.setLineDash([6, 4]);
        ctx.beginPath();
        ctx.moveTo(42, py(line.value));
        ctx.lineTo(w - 8, py(line.value));
        ctx.stroke();
        ctx.setLineDash([]);
        ctx.fillStyle = line.color;
        ctx.font = "10px sans-serif";
        ctx.fillText(line.label, 46, py(line.value) - 3);
    }

    for (const tr of traces) {
        ctx.strokeStyle = tr.color;
        ctx.setLineDash(tr.dashed ? [4, 3] : []);
        ctx.beginPath();
        tr.points.forEach((p, i) => (i ? ctx.lineTo(px(p.t), py(p.value))
                                       : ctx.moveTo(px(p.t), py(p.value))));
        ctx.stroke();
        ctx.setLineDash([]);
    }

    // axes labels (min/max only; this is a strip chart, not a report)
    ctx.fillStyle = "#888";
    ctx.font = "10px sans-serif";
    ctx.fillText(vMax.toFixed(1), 2, 14);
    ctx.fillText(vMin.toFixed(1), 2, h - 18);
    ctx.fillText(`${tMin.toFixed(0)}s`, 42, h - 4);
    ctx.fillText(`${tMax.toFixed(0)}s`, w - 45, h - 4);

    let lx = 60;
    for (const tr of traces) {
        ctx.fillStyle = tr.color;
        ctx.fillText(tr.label, lx, 12);
        lx += ctx.measureText(tr.label).width + 14;
    }
}
