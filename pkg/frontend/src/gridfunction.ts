import { GridFunctionData } from "./types";

/** Validate and normalize a serialized grid function. */
export function parseGridFunction(data: unknown): GridFunctionData {
  if (typeof data !== "object" || data === null) {
    throw new Error("snapshot is not a JSON object");
  }
  const obj = data as Record<string, unknown>;
  for (const key of ["dim", "nodes", "re", "im"]) {
    if (!(key in obj)) throw new Error(`snapshot missing field "${key}"`);
  }
  const dim = obj.dim as number;
  const nodes = obj.nodes as number[][];
  const re = obj.re as number[];
  const im = obj.im as number[];
  if (!Array.isArray(nodes) || !Array.isArray(re) || !Array.isArray(im)) {
    throw new Error("snapshot fields have wrong types");
  }
  if (nodes.length !== re.length || re.length !== im.length) {
    throw new Error("snapshot node/value lengths differ");
  }
  if (dim !== 1 && dim !== 2) throw new Error(`unsupported dim ${dim}`);
  return { dim, nodes, re, im };
}

export interface StructuredGrid {
  xs: number[];
  ys: number[];
  /** index(ix, iy) into the node arrays, or -1 when the node is absent */
  index: (ix: number, iy: number) => number;
}

/** Recover the tensor structure of a 2D node list. */
export function structure2d(gf: GridFunctionData): StructuredGrid {
  const xs = [...new Set(gf.nodes.map((n) => n[0]))].sort((a, b) => a - b);
  const ys = [...new Set(gf.nodes.map((n) => n[1]))].sort((a, b) => a - b);
  const lookup = new Map<string, number>();
  gf.nodes.forEach((n, i) => lookup.set(`${n[0]}|${n[1]}`, i));
  if (lookup.size !== gf.nodes.length || xs.length * ys.length !== gf.nodes.length) {
    throw new Error("2D snapshot nodes are not a full tensor grid");
  }
  return {
    xs,
    ys,
    index: (ix, iy) => lookup.get(`${xs[ix]}|${ys[iy]}`) ?? -1,
  };
}
