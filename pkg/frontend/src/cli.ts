#!/usr/bin/env node
/** nleig-plot --job job.json: render one figure (PNG + SVG). */

import { loadJob, runJob } from "./render";

export function main(argv: string[]): number {
  const args = argv.slice(2);
  const flag = args.indexOf("--job");
  if (flag < 0 || flag + 1 >= args.length) {
    process.stderr.write("usage: nleig-plot --job job.json\n");
    return 2;
  }
  try {
    const job = loadJob(args[flag + 1]);
    const out = runJob(job);
    process.stdout.write(`wrote ${out.pngPath} and ${out.svgPath}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv));
}
