import * as fs from "fs";
import * as path from "path";

import { Resvg } from "@resvg/resvg-js";

import { renderBifurcationSvg } from "./bifurcation";
import { renderProfileSvg } from "./profile";
import { PlotJob, PlotJobSchema } from "./types";

export function renderSvg(job: PlotJob): string {
  if (job.kind === "profile_grid") return renderProfileSvg(job);
  return renderBifurcationSvg(job);
}

export function svgToPng(svg: string): Buffer {
  const resvg = new Resvg(svg, {
    font: { loadSystemFonts: true },
    background: "white",
  });
  return resvg.render().asPng();
}

export interface RenderedFiles {
  svgPath: string;
  pngPath: string;
}

/** Render a job and write both the PNG and the SVG next to `output`. */
export function runJob(job: PlotJob): RenderedFiles {
  const svg = renderSvg(job);
  const base = job.output.replace(/\.(png|svg)$/i, "");
  const svgPath = `${base}.svg`;
  const pngPath = `${base}.png`;
  fs.mkdirSync(path.dirname(path.resolve(base)), { recursive: true });
  fs.writeFileSync(svgPath, svg);
  fs.writeFileSync(pngPath, svgToPng(svg));
  return { svgPath, pngPath };
}

export function loadJob(jobPath: string): PlotJob {
  const raw = JSON.parse(fs.readFileSync(jobPath, "utf8"));
  const parsed = PlotJobSchema.safeParse(raw);
  if (!parsed.success) {
    throw new Error(`invalid job file: ${parsed.error.message}`);
  }
  return parsed.data;
}
