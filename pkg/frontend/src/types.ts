import { z } from "zod";

export const StylingSchema = z.object({
  width: z.number().int().positive().optional(),
  height: z.number().int().positive().optional(),
  marker_radius: z.number().positive().optional(),
  dotted_children: z.boolean().optional(),
});

export const PlotJobSchema = z.object({
  kind: z.enum(["bifurcation_eps", "bifurcation_gamma", "profile_grid"]),
  inputs: z.array(z.string()).min(1),
  styling: StylingSchema.optional(),
  output: z.string(),
});

export type PlotJob = z.infer<typeof PlotJobSchema>;

export interface Styling {
  width: number;
  height: number;
  markerRadius: number;
  dottedChildren: boolean;
}

export function resolveStyling(job: PlotJob): Styling {
  const s = job.styling ?? {};
  return {
    width: s.width ?? 760,
    height: s.height ?? 520,
    markerRadius: s.marker_radius ?? 7,
    dottedChildren: s.dotted_children ?? true,
  };
}

/** One data row of the branch CSV (16 fields). */
export interface BranchPointRow {
  branchId: string;
  parentId: string;
  paramName: string;
  paramValue: number;
  eps: number;
  gamma: number;
  reMu: number;
  imMu: number;
  normPsi: number;
  newtonResidual: number;
  svMin: number | null;
  symPT: number | null;
  symP1T: number | null;
  symP2T: number | null;
  symLin: number | null;
  symLinSign: number | null;
}

/** A bifurcation-marker row (param_value plus marker=1 appended). */
export interface MarkerRow {
  branchId: string;
  parentId: string;
  paramName: string;
  paramValue: number;
}

export interface BranchData {
  points: BranchPointRow[];
  markers: MarkerRow[];
}

/** Serialized grid function {dim, nodes, re, im}. */
export interface GridFunctionData {
  dim: number;
  nodes: number[][];
  re: number[];
  im: number[];
}
