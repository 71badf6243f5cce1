/** Minimal deterministic SVG renderer: linear/log scales, axes, lines.
 *
 * Output is plain string assembly with fixed styling and no timestamps,
 * so identical inputs give byte-identical images.
 */

export interface Scale {
  (x: number): number;
  ticks: number[];
  domain: [number, number];
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export function color(i: number): string {
  return PALETTE[i % PALETTE.length];
}

function niceStep(span: number, target: number): number {
  const raw = span / Math.max(1, target);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const m of [1, 2, 5, 10]) {
    if (raw <= m * mag) return m * mag;
  }
  return 10 * mag;
}

export function linearScale(
  lo: number,
  hi: number,
  rangeLo: number,
  rangeHi: number,
  tickTarget = 6,
): Scale {
  if (!(hi > lo)) hi = lo + 1;
  const step = niceStep(hi - lo, tickTarget);
  const t0 = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = t0; v <= hi + 1e-9 * step; v += step) {
    ticks.push(Math.abs(v) < 1e-12 * step ? 0 : v);
  }
  const f = ((x: number) =>
    rangeLo + ((x - lo) / (hi - lo)) * (rangeHi - rangeLo)) as Scale;
  f.ticks = ticks;
  f.domain = [lo, hi];
  return f;
}

export function logScale(
  lo: number,
  hi: number,
  rangeLo: number,
  rangeHi: number,
): Scale {
  const llo = Math.floor(Math.log10(lo));
  const lhi = Math.ceil(Math.log10(hi));
  const ticks: number[] = [];
  // decimal-literal parsing avoids Math.pow(10, -4) !== 1e-4 ulp noise
  for (let e = llo; e <= lhi; e++) ticks.push(Number(`1e${e}`));
  const f = ((x: number) =>
    rangeLo +
    ((Math.log10(x) - llo) / (lhi - llo)) * (rangeHi - rangeLo)) as Scale;
  f.ticks = ticks;
  f.domain = [Number(`1e${llo}`), Number(`1e${lhi}`)];
  return f;
}

export function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) {
    const e = Math.floor(Math.log10(a));
    const mant = v / Math.pow(10, e);
    const m = Math.abs(mant - 1) < 1e-9 ? "" : `${Number(mant.toFixed(2))}x`;
    return `${m}1e${e}`;
  }
  return String(Number(v.toPrecision(6)));
}

export interface Panel {
  x: number;
  y: number;
  width: number;
  height: number;
  title?: string;
  xLabel?: string;
  yLabel?: string;
}

export class SvgDoc {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="${width}" height="${height}" fill="white"/>`,
    );
  }

  raw(s: string) {
    this.parts.push(s);
  }

  text(
    x: number,
    y: number,
    s: string,
    opts: { size?: number; anchor?: string; rotate?: boolean } = {},
  ) {
    const size = opts.size ?? 12;
    const anchor = opts.anchor ?? "start";
    const tr = opts.rotate ? ` transform="rotate(-90 ${x} ${y})"` : "";
    this.parts.push(
      `<text x="${x}" y="${y}" font-size="${size}" text-anchor="${anchor}"${tr}>` +
        `${escapeXml(s)}</text>`,
    );
  }

  axes(panel: Panel, xs: Scale, ys: Scale) {
    const { x, y, width: w, height: h } = panel;
    this.raw(`<g stroke="#cccccc" stroke-width="1">`);
    for (const v of xs.ticks) {
      const px = r2(xs(v));
      this.raw(`<line x1="${px}" y1="${y}" x2="${px}" y2="${y + h}"/>`);
    }
    for (const v of ys.ticks) {
      const py = r2(ys(v));
      this.raw(`<line x1="${x}" y1="${py}" x2="${x + w}" y2="${py}"/>`);
    }
    this.raw(`</g>`);
    this.raw(
      `<rect x="${x}" y="${y}" width="${w}" height="${h}" fill="none" stroke="black"/>`,
    );
    for (const v of xs.ticks) {
      this.text(r2(xs(v)), y + h + 16, fmtTick(v), { size: 11, anchor: "middle" });
    }
    for (const v of ys.ticks) {
      this.text(x - 6, r2(ys(v)) + 4, fmtTick(v), { size: 11, anchor: "end" });
    }
    if (panel.title) {
      this.text(x + w / 2, y - 8, panel.title, { size: 13, anchor: "middle" });
    }
    if (panel.xLabel) {
      this.text(x + w / 2, y + h + 34, panel.xLabel, { size: 12, anchor: "middle" });
    }
    if (panel.yLabel) {
      this.text(x - 44, y + h / 2, panel.yLabel, {
        size: 12,
        anchor: "middle",
        rotate: true,
      });
    }
  }

  line(
    xsVals: number[],
    ysVals: number[],
    xs: Scale,
    ys: Scale,
    stroke: string,
  ) {
    const pts: string[] = [];
    for (let i = 0; i < xsVals.length; i++) {
      const yv = ysVals[i];
      if (!Number.isFinite(yv)) continue;
      pts.push(`${r2(xs(xsVals[i]))},${r2(ys(yv))}`);
    }
    this.raw(
      `<polyline fill="none" stroke="${stroke}" stroke-width="1.5" points="${pts.join(" ")}"/>`,
    );
  }

  legend(x: number, y: number, entries: Array<[string, string]>) {
    entries.forEach(([label, stroke], i) => {
      const yy = y + 16 * i;
      this.raw(
        `<line x1="${x}" y1="${yy - 4}" x2="${x + 22}" y2="${yy - 4}" ` +
          `stroke="${stroke}" stroke-width="2"/>`,
      );
      this.text(x + 28, yy, label, { size: 11 });
    });
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function r2(v: number): number {
  return Math.round(v * 100) / 100;
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function extent(vals: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of vals) {
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === Infinity) throw new Error("no finite values to plot");
  return [lo, hi];
}

export function padded(range: [number, number], frac = 0.06): [number, number] {
  const [lo, hi] = range;
  const pad = (hi - lo || Math.abs(hi) || 1) * frac;
  return [lo - pad, hi + pad];
}
