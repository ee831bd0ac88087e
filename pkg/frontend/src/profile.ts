import * as fs from "fs";
import { PNG } from "pngjs";

import { viridis } from "./colormap";
import { parseGridFunction, structure2d } from "./gridfunction";
import { PALETTE, Svg, drawFrame, fmt, polylinePoints } from "./svg";
import { GridFunctionData, PlotJob, resolveStyling } from "./types";

function heatmapBase64(values: number[], nx: number, ny: number,
                       lo: number, hi: number): string {
  const png = new PNG({ width: nx, height: ny });
  const span = hi - lo || 1;
  for (let iy = 0; iy < ny; iy++) {
    for (let ix = 0; ix < nx; ix++) {
      // row 0 at the top = largest y
      const v = values[(ny - 1 - iy) * nx + ix];
      const [r, g, b] = viridis((v - lo) / span);
      const k = 4 * (iy * nx + ix);
      png.data[k] = r;
      png.data[k + 1] = g;
      png.data[k + 2] = b;
      png.data[k + 3] = 255;
    }
  }
  return PNG.sync.write(png, { deflateLevel: 9, deflateStrategy: 3 })
    .toString("base64");
}

const FIELDS: Array<[string, (re: number, im: number) => number]> = [
  ["|psi|", (re, im) => Math.hypot(re, im)],
  ["Re psi", (re) => re],
  ["Im psi", (_re, im) => im],
];

function render2d(gf: GridFunctionData, job: PlotJob): string {
  const styling = resolveStyling(job);
  const grid = structure2d(gf);
  const nx = grid.xs.length;
  const ny = grid.ys.length;
  const width = Math.max(styling.width, 720);
  const height = Math.round(width / 2.6);
  const svg = new Svg(width, height);
  const panelW = (width - 4 * 30) / 3;
  const panelH = height - 86;
  FIELDS.forEach(([label, f], k) => {
    const values: number[] = new Array(nx * ny);
    for (let iy = 0; iy < ny; iy++) {
      for (let ix = 0; ix < nx; ix++) {
        const i = grid.index(ix, iy);
        values[iy * nx + ix] = f(gf.re[i], gf.im[i]);
      }
    }
    const lo = Math.min(...values);
    const hi = Math.max(...values);
    const left = 30 + k * (panelW + 30);
    svg.image(left, 40, panelW, panelH, heatmapBase64(values, nx, ny, lo, hi));
    svg.rect(left, 40, panelW, panelH, "none", "#444");
    svg.text(left + panelW / 2, 24,
             `${label}  [${fmt(lo)}, ${fmt(hi)}]`, 12, "middle");
    svg.text(left, height - 14,
             `x1 in [${fmt(grid.xs[0])}, ${fmt(grid.xs[nx - 1])}], ` +
             `x2 in [${fmt(grid.ys[0])}, ${fmt(grid.ys[ny - 1])}]`, 10);
  });
  return svg.toString();
}

function render1d(gf: GridFunctionData, job: PlotJob): string {
  const styling = resolveStyling(job);
  const svg = new Svg(styling.width, styling.height);
  const x = gf.nodes.map((n) => n[0]);
  const series = FIELDS.map(([label, f]) =>
    [label, gf.re.map((re, i) => f(re, gf.im[i]))] as [string, number[]]);
  const all = series.flatMap(([, vals]) => vals);
  const pad = (lo: number, hi: number): [number, number] => {
    const d = (hi - lo) || 1;
    return [lo - 0.05 * d, hi + 0.05 * d];
  };
  const box = { left: 62, top: 28, width: styling.width - 86,
                height: styling.height - 92 };
  const frame = drawFrame(svg, box,
                          [Math.min(...x), Math.max(...x)],
                          pad(Math.min(...all), Math.max(...all)),
                          "x", "psi");
  series.forEach(([label, vals], k) => {
    svg.polyline(
      polylinePoints(x.map((xi, i) => [frame.x(xi), frame.y(vals[i])])),
      PALETTE[k], 1.8, k === 0 ? undefined : "6,3",
      `profile-${label.replace(/[^a-zA-Z]/g, "")}`);
    const lx = box.left + box.width - 106;
    const ly = box.top + 14 + 16 * k;
    svg.line(lx, ly - 4, lx + 26, ly - 4, PALETTE[k], 2);
    svg.text(lx + 32, ly, label, 11);
  });
  return svg.toString();
}

/** Eigenfunction profile: heatmap panels in 2D, line plots in 1D. */
export function renderProfileSvg(job: PlotJob): string {
  const raw = JSON.parse(fs.readFileSync(job.inputs[0], "utf8"));
  const gf = parseGridFunction(raw);
  return gf.dim === 2 ? render2d(gf, job) : render1d(gf, job);
}
