/**
 * Reader for the simulator's samples.csv.
 *
 * The schema is fixed by the producer (schema version 1): nine columns in a
 * fixed order, one row per (scenario, precoder, direction, sweep value,
 * drop, UE). Anything else is rejected up front so a stale or foreign file
 * cannot silently produce an empty or garbled figure.
 */

export const SCHEMA_COLUMNS = [
  "scenario",
  "precoder",
  "direction",
  "sweep_param",
  "sweep_value",
  "drop",
  "ue",
  "sinr_db",
  "se",
] as const;

export type ColumnName = (typeof SCHEMA_COLUMNS)[number];

/** Columns usable for grouping series. */
export const GROUPABLE_COLUMNS: ColumnName[] = [
  "scenario",
  "precoder",
  "direction",
  "sweep_param",
];

export interface SampleRow {
  scenario: string;
  precoder: string;
  direction: string;
  sweep_param: string;
  sweep_value: number;
  drop: number;
  ue: number;
  sinr_db: number;
  se: number;
}

export class SchemaMismatchError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaMismatchError";
  }
}

export class EmptyInputError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "EmptyInputError";
  }
}

function parseNumber(raw: string, column: string, line: number): number {
  if (raw === "-inf") return -Infinity;
  if (raw === "inf") return Infinity;
  const value = Number(raw);
  if (Number.isNaN(value)) {
    throw new SchemaMismatchError(
      `line ${line}: column ${column} has non-numeric value ${JSON.stringify(raw)}`,
    );
  }
  return value;
}

export function parseSamplesCsv(text: string): SampleRow[] {
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new EmptyInputError("sample file is empty");
  }
  const header = lines[0].split(",");
  if (
    header.length !== SCHEMA_COLUMNS.length ||
    !SCHEMA_COLUMNS.every((c, i) => header[i] === c)
  ) {
    throw new SchemaMismatchError(
      `expected header ${SCHEMA_COLUMNS.join(",")} but found ${lines[0]}`,
    );
  }
  if (lines.length === 1) {
    throw new EmptyInputError("sample file has a header but no rows");
  }
  const rows: SampleRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== SCHEMA_COLUMNS.length) {
      throw new SchemaMismatchError(
        `line ${i + 1}: expected ${SCHEMA_COLUMNS.length} fields, found ${parts.length}`,
      );
    }
    rows.push({
      scenario: parts[0],
      precoder: parts[1],
      direction: parts[2],
      sweep_param: parts[3],
      sweep_value: parseNumber(parts[4], "sweep_value", i + 1),
      drop: parseNumber(parts[5], "drop", i + 1),
      ue: parseNumber(parts[6], "ue", i + 1),
      sinr_db: parseNumber(parts[7], "sinr_db", i + 1),
      se: parseNumber(parts[8], "se", i + 1),
    });
  }
  return rows;
}

export function checkGroupColumns(columns: string[]): ColumnName[] {
  for (const col of columns) {
    if (!GROUPABLE_COLUMNS.includes(col as ColumnName)) {
      throw new SchemaMismatchError(
        `cannot group by ${JSON.stringify(col)}; valid columns: ${GROUPABLE_COLUMNS.join(", ")}`,
      );
    }
  }
  return columns as ColumnName[];
}
