export { BRANCH_CSV_HEADER, groupBranches, parseBranchCsv } from "./csv";
export { parseGridFunction, structure2d } from "./gridfunction";
export { renderBifurcationSvg } from "./bifurcation";
export { renderProfileSvg } from "./profile";
export { loadJob, renderSvg, runJob, svgToPng } from "./render";
export { PlotJobSchema } from "./types";
export type { BranchPointRow, GridFunctionData, MarkerRow, PlotJob } from "./types";
