import { BranchData, BranchPointRow, MarkerRow } from "./types";

export const BRANCH_CSV_HEADER =
  "branch_id,parent_id,param_name,param_value,eps,gamma,re_mu,im_mu," +
  "norm_psi,newton_residual,sv_min,sym_PT,sym_P1T,sym_P2T,sym_lin,sym_lin_sign";

function num(field: string, where: string): number {
  const v = Number(field);
  if (field.trim() === "" || !Number.isFinite(v)) {
    throw new Error(`malformed CSV: expected a number in ${where}, got "${field}"`);
  }
  return v;
}

function numOrNull(field: string): number | null {
  if (field.trim() === "") return null;
  const v = Number(field);
  if (!Number.isFinite(v)) throw new Error(`malformed CSV field "${field}"`);
  return v;
}

/** Parse the documented branch CSV; marker rows carry a 17th field "1". */
export function parseBranchCsv(text: string): BranchData {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) throw new Error("malformed CSV: file is empty");
  if (lines[0] !== BRANCH_CSV_HEADER) {
    throw new Error("malformed CSV: unexpected header");
  }
  const points: BranchPointRow[] = [];
  const markers: MarkerRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const f = lines[i].split(",");
    const where = `row ${i + 1}`;
    if (f.length === 17 && f[16] === "1") {
      markers.push({
        branchId: f[0],
        parentId: f[1],
        paramName: f[2],
        paramValue: num(f[3], where),
      });
    } else if (f.length === 16) {
      points.push({
        branchId: f[0],
        parentId: f[1],
        paramName: f[2],
        paramValue: num(f[3], where),
        eps: num(f[4], where),
        gamma: num(f[5], where),
        reMu: num(f[6], where),
        imMu: num(f[7], where),
        normPsi: num(f[8], where),
        newtonResidual: num(f[9], where),
        svMin: numOrNull(f[10]),
        symPT: numOrNull(f[11]),
        symP1T: numOrNull(f[12]),
        symP2T: numOrNull(f[13]),
        symLin: numOrNull(f[14]),
        symLinSign: numOrNull(f[15]),
      });
    } else {
      throw new Error(`malformed CSV: ${where} has ${f.length} fields`);
    }
  }
  if (points.length === 0) {
    throw new Error("malformed CSV: no data rows");
  }
  return { points, markers };
}

/** Group points by branch id, each branch sorted by parameter value. */
export function groupBranches(data: BranchData): Map<string, BranchPointRow[]> {
  const map = new Map<string, BranchPointRow[]>();
  for (const p of data.points) {
    const list = map.get(p.branchId) ?? [];
    list.push(p);
    map.set(p.branchId, list);
  }
  for (const list of map.values()) {
    list.sort((a, b) => a.paramValue - b.paramValue);
  }
  return new Map([...map.entries()].sort(([a], [b]) => a.localeCompare(b)));
}
