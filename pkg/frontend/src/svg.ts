/** Small deterministic SVG builder plus axis helpers. */

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  const s = x.toPrecision(7);
  return s.includes(".") || s.includes("e")
    ? String(Number.parseFloat(s))
    : s;
}

export function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface Scale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (d0 === d1) {
    d0 -= 0.5;
    d1 += 0.5;
  }
  const f = ((v: number) =>
    range[0] + ((v - d0) / (d1 - d0)) * (range[1] - range[0])) as Scale;
  f.domain = [d0, d1];
  f.range = range;
  return f;
}

/** Loose nice tick positions covering [lo, hi]. */
export function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const span = hi - lo;
  const step0 = Math.pow(10, Math.floor(Math.log10(span / count)));
  let step = step0;
  for (const m of [1, 2, 5, 10]) {
    if (span / (step0 * m) <= count) {
      step = step0 * m;
      break;
    }
  }
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-12 * span; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

export function polylinePoints(xy: Array<[number, number]>): string {
  return xy.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
}

export class Svg {
  private parts: string[] = [];

  constructor(public width: number, public height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" ` +
        `width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="DejaVu Sans, sans-serif">`,
    );
    this.rect(0, 0, width, height, "white");
  }

  raw(fragment: string): void {
    this.parts.push(fragment);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, stroke?: string): void {
    const s = stroke ? ` stroke="${stroke}"` : "";
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"${s}/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#444", width = 1): void {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  polyline(points: string, stroke: string, width = 1.6, dash?: string,
           cls?: string): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    const c = cls ? ` class="${cls}"` : "";
    this.parts.push(
      `<polyline${c} points="${points}" fill="none" stroke="${stroke}" ` +
        `stroke-width="${width}"${d}/>`,
    );
  }

  circle(cx: number, cy: number, r: number, stroke: string, fill = "none",
         width = 1.8, cls?: string): void {
    const c = cls ? ` class="${cls}"` : "";
    this.parts.push(
      `<circle${c} cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" ` +
        `fill="${fill}" stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  text(x: number, y: number, content: string, size = 12, anchor = "start",
       fill = "#222"): void {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" ` +
        `text-anchor="${anchor}" fill="${fill}">${esc(content)}</text>`,
    );
  }

  image(x: number, y: number, w: number, h: number, pngBase64: string): void {
    this.parts.push(
      `<image x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" ` +
        `preserveAspectRatio="none" href="data:image/png;base64,${pngBase64}"/>`,
    );
  }

  toString(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                        "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

export interface Frame {
  x: Scale;
  y: Scale;
}

/** Draw axes with ticks and labels; returns the data-to-pixel scales. */
export function drawFrame(svg: Svg, box: { left: number; top: number; width: number; height: number },
                          xdom: [number, number], ydom: [number, number],
                          xlabel: string, ylabel: string): Frame {
  const x = linearScale(xdom, [box.left, box.left + box.width]);
  const y = linearScale(ydom, [box.top + box.height, box.top]);
  svg.rect(box.left, box.top, box.width, box.height, "none", "#444");
  for (const t of niceTicks(x.domain[0], x.domain[1])) {
    const px = x(t);
    svg.line(px, box.top + box.height, px, box.top + box.height + 5);
    svg.text(px, box.top + box.height + 18, fmt(t), 11, "middle");
  }
  for (const t of niceTicks(y.domain[0], y.domain[1])) {
    const py = y(t);
    svg.line(box.left - 5, py, box.left, py);
    svg.text(box.left - 8, py + 4, fmt(t), 11, "end");
  }
  svg.text(box.left + box.width / 2, box.top + box.height + 36, xlabel, 13, "middle");
  svg.text(14, box.top + 12, ylabel, 13, "start");
  return { x, y };
}
