/** Progress dashboard model: per-class counts and inter-rater agreement. */

import { ProgressResponse } from "./api.js";

export interface ClassRow {
  label: string;
  confirmed: number;
  rejected: number;
  pending: number;
  done: number; // fraction decided
}

export function classRows(progress: ProgressResponse): ClassRow[] {
  return Object.entries(progress.classes)
    .map(([label, counts]) => {
      const total = counts.confirmed + counts.rejected + counts.pending;
      return {
        label,
        confirmed: counts.confirmed,
        rejected: counts.rejected,
        pending: counts.pending,
        done: total === 0 ? 0 : (counts.confirmed + counts.rejected) / total,
      };
    })
    .sort((a, b) => a.label.localeCompare(b.label));
}

/** Conventional qualitative bands for Cohen's kappa. */
export function kappaBand(kappa: number): string {
  if (kappa < 0.2) return "slight";
  if (kappa < 0.4) return "fair";
  if (kappa < 0.6) return "moderate";
  if (kappa < 0.8) return "substantial";
  return "almost perfect";
}

export function formatKappa(progress: ProgressResponse): string[] {
  return progress.kappa.map(
    (entry) =>
      `${entry.rater_a} vs ${entry.rater_b}: κ = ${entry.kappa.toFixed(2)} ` +
      `(${kappaBand(entry.kappa)}, n=${entry.items})`,
  );
}
