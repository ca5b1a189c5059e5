import type { LabelRecord } from "./types.js";

/** Chance-corrected agreement (p_o - p_e) / (1 - p_e). */
export function cohenKappa(labelsA: string[], labelsB: string[]): number {
  if (labelsA.length !== labelsB.length) {
    throw new Error("label lists must have equal length");
  }
  if (labelsA.length === 0) {
    throw new Error("label lists must be non-empty");
  }
  const n = labelsA.length;
  let agree = 0;
  for (let i = 0; i < n; i++) {
    if (labelsA[i] === labelsB[i]) agree++;
  }
  const pO = agree / n;
  const categories = new Set([...labelsA, ...labelsB]);
  let pE = 0;
  for (const c of categories) {
    const fa = labelsA.filter((l) => l === c).length / n;
    const fb = labelsB.filter((l) => l === c).length / n;
    pE += fa * fb;
  }
  if (pE === 1.0) {
    return pO === 1.0 ? 1.0 : 0.0;
  }
  return (pO - pE) / (1.0 - pE);
}

/** Recompute the dashboard's kappa from an exported label log: items of one
 * round labeled by both annotators, skips excluded, in batch id order. */
export function kappaFromLog(
  records: LabelRecord[],
  round: number,
  annotatorA: string,
  annotatorB: string,
): number {
  const byA = new Map<string, string>();
  const byB = new Map<string, string>();
  for (const rec of records) {
    if (rec.round !== round) continue;
    if (rec.annotator_id === annotatorA) byA.set(rec.comment_id, rec.label);
    if (rec.annotator_id === annotatorB) byB.set(rec.comment_id, rec.label);
  }
  const labelsA: string[] = [];
  const labelsB: string[] = [];
  for (const [cid, la] of byA) {
    const lb = byB.get(cid);
    if (lb === undefined || la === "skip" || lb === "skip") continue;
    labelsA.push(la);
    labelsB.push(lb);
  }
  return cohenKappa(labelsA, labelsB);
}

/** Parse a line-delimited JSON label log export. */
export function parseLogExport(text: string): LabelRecord[] {
  return text
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as LabelRecord);
}
