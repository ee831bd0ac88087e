import { describe, expect, it } from "vitest";

import { BRANCH_CSV_HEADER, groupBranches, parseBranchCsv } from "../src/csv";

const point = (id: string, parent: string, eps: number, mu: number) =>
  [id, parent, "eps", eps, eps, 2, mu, 0, 1, 1e-12, 0.07,
   1e-14, 1e-14, "", 1e-14, 1].join(",");

const marker = (id: string, eps: number) =>
  [id, "", "eps", eps, "", "", "", "", "", "", "", "", "", "", "", "", "1"].join(",");

function sample(): string {
  return [
    BRANCH_CSV_HEADER,
    point("1", "", 0.0, 2.1),
    point("1", "", 0.5, 2.0),
    point("2", "", 0.0, 2.55),
    marker("1", 0.25),
  ].join("\n");
}

describe("parseBranchCsv", () => {
  it("parses data rows and marker rows", () => {
    const data = parseBranchCsv(sample());
    expect(data.points).toHaveLength(3);
    expect(data.markers).toHaveLength(1);
    expect(data.points[0].reMu).toBe(2.1);
    expect(data.points[0].symP2T).toBeNull();
    expect(data.markers[0].paramValue).toBe(0.25);
  });

  it("groups and sorts branches", () => {
    const groups = groupBranches(parseBranchCsv(sample()));
    expect([...groups.keys()]).toEqual(["1", "2"]);
    expect(groups.get("1")!.map((p) => p.paramValue)).toEqual([0.0, 0.5]);
  });

  it("rejects an empty file", () => {
    expect(() => parseBranchCsv("")).toThrow(/empty/);
  });

  it("rejects a wrong header", () => {
    expect(() => parseBranchCsv("a,b,c\n1,2,3")).toThrow(/header/);
  });

  it("rejects ragged rows", () => {
    expect(() => parseBranchCsv(`${BRANCH_CSV_HEADER}\n1,2,3`)).toThrow(/fields/);
  });

  it("rejects a header-only file (no data rows)", () => {
    expect(() => parseBranchCsv(BRANCH_CSV_HEADER + "\n")).toThrow(/no data/);
  });
});
