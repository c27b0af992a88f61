import { mkdtempSync, readFileSync, writeFileSync, existsSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

import { describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { SCHEMA_COLUMNS } from "../src/csv.js";
import { renderFigureSvg, renderFigure } from "../src/render.js";
import { niceTicks } from "../src/svg.js";

const HEADER = SCHEMA_COLUMNS.join(",");

/** fig5-like file: 4 scenarios x 2 precoders, 3 drops x 2 UEs each. */
function fig5Csv(): string {
  const lines = [HEADER];
  let seed = 1;
  for (const scenario of ["sync", "asyn", "pbta", "cellular"]) {
    for (const precoder of ["pmmse", "lpmmse"]) {
      for (let drop = 0; drop < 3; drop++) {
        for (let ue = 0; ue < 2; ue++) {
          seed = (seed * 48271) % 2147483647;
          const se = ((seed % 1000) / 1000) * 8;
          lines.push(
            `${scenario},${precoder},dl,none,0,${drop},${ue},5.0,${se.toFixed(4)}`,
          );
        }
      }
    }
  }
  return lines.join("\n") + "\n";
}

function sweepCsv(): string {
  const lines = [HEADER];
  for (const scenario of ["sync", "asyn"]) {
    for (const cp of [2, 4, 6]) {
      for (let drop = 0; drop < 2; drop++) {
        const se = scenario === "sync" ? 8 - cp * 0.3 : 4 + cp * 0.2;
        lines.push(
          `${scenario},pmmse,dl,cp_length,${cp},${drop},0,5.0,${se.toFixed(3)}`,
        );
      }
    }
  }
  return lines.join("\n") + "\n";
}

function tmpFile(name: string, content: string): string {
  const dir = mkdtempSync(join(tmpdir(), "cfmimo-plots-"));
  const path = join(dir, name);
  writeFileSync(path, content);
  return path;
}

function countSeries(svg: string): number {
  return (svg.match(/<polyline class="series"/g) ?? []).length;
}

describe("renderFigureSvg", () => {
  it("renders one CDF series per scenario x precoder", () => {
    const input = tmpFile("samples.csv", fig5Csv());
    const svg = renderFigureSvg({
      input,
      kind: "cdf",
      group: ["scenario", "precoder"],
      output: "unused.svg",
    });
    expect(countSeries(svg)).toBe(8);
    expect(svg).toContain("sync/pmmse");
    expect(svg).toContain("cellular/lpmmse");
  });

  it("renders sweep lines with one point per swept value", () => {
    const input = tmpFile("sweep.csv", sweepCsv());
    const svg = renderFigureSvg({
      input,
      kind: "sweep-line",
      group: ["scenario"],
      output: "unused.svg",
    });
    expect(countSeries(svg)).toBe(2);
    expect(svg).toContain("cp_length");
  });

  it("is byte-deterministic", () => {
    const input = tmpFile("samples.csv", fig5Csv());
    const spec = {
      input,
      kind: "cdf" as const,
      group: ["scenario"],
      output: "unused.svg",
    };
    expect(renderFigureSvg(spec)).toBe(renderFigureSvg(spec));
  });

  it("rejects non-svg output paths", () => {
    const input = tmpFile("samples.csv", fig5Csv());
    expect(() =>
      renderFigure({
        input,
        kind: "cdf",
        group: ["scenario"],
        output: "fig.png",
      }),
    ).toThrow(/svg/);
  });
});

describe("cli", () => {
  it("renders a figure end to end", () => {
    const input = tmpFile("samples.csv", fig5Csv());
    const output = input.replace("samples.csv", "fig.svg");
    const code = main([
      "render",
      "--in",
      input,
      "--kind",
      "cdf",
      "--group",
      "scenario,precoder",
      "--out",
      output,
    ]);
    expect(code).toBe(0);
    const svg = readFileSync(output, "utf-8");
    expect(countSeries(svg)).toBe(8);
  });

  it("fails cleanly on schema mismatch without writing output", () => {
    const input = tmpFile("bad.csv", "foo,bar\n1,2\n");
    const output = input.replace("bad.csv", "fig.svg");
    const code = main([
      "render",
      "--in",
      input,
      "--kind",
      "cdf",
      "--group",
      "scenario",
      "--out",
      output,
    ]);
    expect(code).toBe(1);
    expect(existsSync(output)).toBe(false);
  });

  it("fails cleanly on an empty sample file", () => {
    const input = tmpFile("empty.csv", "");
    const output = input.replace("empty.csv", "fig.svg");
    const code = main([
      "render",
      "--in", input,
      "--kind", "cdf",
      "--group", "scenario",
      "--out", output,
    ]);
    expect(code).toBe(1);
    expect(existsSync(output)).toBe(false);
  });

  it("rejects unknown kinds and missing flags", () => {
    expect(main(["render", "--kind", "pie"])).toBe(2);
    expect(main(["plot"])).toBe(2);
  });
});

describe("niceTicks", () => {
  it("produces round, increasing ticks covering the range", () => {
    const ticks = niceTicks(0, 1);
    expect(ticks[0]).toBeGreaterThanOrEqual(0);
    expect(ticks[ticks.length - 1]).toBeLessThanOrEqual(1);
    for (let i = 1; i < ticks.length; i++) {
      expect(ticks[i]).toBeGreaterThan(ticks[i - 1]);
    }
  });

  it("handles degenerate ranges", () => {
    expect(niceTicks(3, 3)).toEqual([3]);
  });
});
