import * as fs from "fs";

import { BRANCH_CSV_HEADER, groupBranches, parseBranchCsv } from "./csv";
import { PALETTE, Svg, drawFrame, polylinePoints } from "./svg";
import { BranchData, MarkerRow, PlotJob, resolveStyling } from "./types";

const IM_EPS = 1e-12;

function mergeCsvInputs(paths: string[]): BranchData {
  const points = [];
  const markers: MarkerRow[] = [];
  for (const path of paths) {
    const data = parseBranchCsv(fs.readFileSync(path, "utf8"));
    points.push(...data.points);
    markers.push(...data.markers);
  }
  return { points, markers };
}

/** Bifurcation diagram: re_mu (and im_mu where nonzero) vs the parameter. */
export function renderBifurcationSvg(job: PlotJob): string {
  const styling = resolveStyling(job);
  const param = job.kind === "bifurcation_eps" ? "eps" : "gamma";
  const data = mergeCsvInputs(job.inputs);
  const bad = data.points.find((p) => p.paramName !== param);
  if (bad) {
    throw new Error(
      `CSV param_name "${bad.paramName}" does not match figure kind ${job.kind}`,
    );
  }
  const branches = groupBranches(data);

  const xs = data.points.map((p) => p.paramValue);
  const ys = data.points.flatMap((p) =>
    Math.abs(p.imMu) > IM_EPS ? [p.reMu, p.imMu] : [p.reMu]);
  const pad = (v: [number, number]): [number, number] => {
    const d = (v[1] - v[0]) || 1;
    return [v[0] - 0.05 * d, v[1] + 0.05 * d];
  };
  const xdom = pad([Math.min(...xs), Math.max(...xs)]);
  const ydom = pad([Math.min(...ys), Math.max(...ys)]);

  const svg = new Svg(styling.width, styling.height);
  const box = { left: 62, top: 28, width: styling.width - 86,
                height: styling.height - 92 };
  const frame = drawFrame(svg, box, xdom, ydom, param, "Re mu");

  let colorIndex = 0;
  const legend: Array<[string, string, boolean]> = [];
  for (const [branchId, pts] of branches) {
    const color = PALETTE[colorIndex++ % PALETTE.length];
    const isChild = pts[0].parentId !== "";
    const dash = isChild && styling.dottedChildren ? "2,5" : undefined;
    svg.polyline(
      polylinePoints(pts.map((p) => [frame.x(p.paramValue), frame.y(p.reMu)])),
      color, 1.8, dash, `branch-${branchId}`);
    legend.push([branchId, color, isChild]);
    const withIm = pts.filter((p) => Math.abs(p.imMu) > IM_EPS);
    if (withIm.length >= 2) {
      svg.polyline(
        polylinePoints(withIm.map((p) => [frame.x(p.paramValue), frame.y(p.imMu)])),
        color, 1.2, "7,3", `branch-${branchId}-im`);
    }
  }

  for (const marker of data.markers) {
    const pts = branches.get(marker.branchId);
    if (!pts || pts.length === 0) continue;
    // place the circle on the parent branch at the marker parameter
    let y = pts[0].reMu;
    for (let i = 0; i < pts.length - 1; i++) {
      const a = pts[i];
      const b = pts[i + 1];
      if (marker.paramValue >= a.paramValue && marker.paramValue <= b.paramValue) {
        const t = (marker.paramValue - a.paramValue) /
          (b.paramValue - a.paramValue || 1);
        y = a.reMu + t * (b.reMu - a.reMu);
        break;
      }
      y = b.reMu;
    }
    svg.circle(frame.x(marker.paramValue), frame.y(y), styling.markerRadius,
               "#111", "none", 1.8, "bifurcation-marker");
  }

  let ly = box.top + 14;
  for (const [branchId, color, isChild] of legend) {
    const lx = box.left + box.width - 118;
    svg.line(lx, ly - 4, lx + 26, ly - 4, color, 2);
    svg.text(lx + 32, ly, `branch ${branchId}${isChild ? " (child)" : ""}`, 11);
    ly += 16;
  }
  svg.text(box.left, 16,
           `bifurcation diagram in ${param} (${branches.size} branches, ` +
           `${data.markers.length} markers)`, 13);
  return svg.toString();
}

export { BRANCH_CSV_HEADER };
