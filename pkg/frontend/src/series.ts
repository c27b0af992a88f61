/**
 * Turn sample rows into plottable series.
 *
 * CDF series: per group, the per-UE SE samples sorted ascending against
 * their empirical quantiles (non-decreasing by construction, ends at 1).
 *
 * Sweep series: per group, mean over drops of the per-drop sum SE at each
 * swept value.
 */

import { ColumnName, SampleRow } from "./csv.js";

export interface Point {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  points: Point[];
}

function groupKey(row: SampleRow, columns: ColumnName[]): string {
  return columns.map((c) => String(row[c])).join("/");
}

function groupRows(
  rows: SampleRow[],
  columns: ColumnName[],
): Map<string, SampleRow[]> {
  const groups = new Map<string, SampleRow[]>();
  for (const row of rows) {
    const key = groupKey(row, columns);
    const bucket = groups.get(key);
    if (bucket) {
      bucket.push(row);
    } else {
      groups.set(key, [row]);
    }
  }
  return groups;
}

function sortedLabels(groups: Map<string, SampleRow[]>): string[] {
  return [...groups.keys()].sort();
}

export function cdfSeries(rows: SampleRow[], columns: ColumnName[]): Series[] {
  const groups = groupRows(rows, columns);
  return sortedLabels(groups).map((label) => {
    const values = groups
      .get(label)!
      .map((r) => r.se)
      .sort((a, b) => a - b);
    const n = values.length;
    const points = values.map((v, i) => ({ x: v, y: (i + 1) / n }));
    return { label, points };
  });
}

export function sweepSeries(
  rows: SampleRow[],
  columns: ColumnName[],
): Series[] {
  const groups = groupRows(rows, columns);
  return sortedLabels(groups).map((label) => {
    // sum SE over UEs within each (sweep value, drop), then average drops
    const sums = new Map<number, Map<number, number>>();
    for (const row of groups.get(label)!) {
      let drops = sums.get(row.sweep_value);
      if (!drops) {
        drops = new Map();
        sums.set(row.sweep_value, drops);
      }
      drops.set(row.drop, (drops.get(row.drop) ?? 0) + row.se);
    }
    const points = [...sums.entries()]
      .map(([x, drops]) => {
        let total = 0;
        for (const v of drops.values()) total += v;
        return { x, y: total / drops.size };
      })
      .sort((a, b) => a.x - b.x);
    return { label, points };
  });
}
