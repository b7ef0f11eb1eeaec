import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";

import { EventRecord } from "../src/events";
import { runCli } from "../src/runner";

export const REPO_ROOT = resolve(__dirname, "..", "..");
export const FIXTURES = join(REPO_ROOT, "fixtures");

// 64x64 single-stage setup so every shipped fixture's pixel range fits and
// a tensorize run stays under a second
export const FAST_CONFIG = [
  "geometry.H = 64",
  "geometry.W = 64",
  "T = 8",
  "M = 256",
  "seed = 5",
  "sta.channels = 8",
  "sta.rounds = 1",
  ...["S", "T", "ST"].flatMap((b) => [
    `branch.${b}.enc_depths = 1`,
    `branch.${b}.enc_channels = 8`,
    `branch.${b}.enc_heads = 2`,
    `branch.${b}.enc_patch = 512`,
    `branch.${b}.dec_depths = ()`,
    `branch.${b}.dec_channels = ()`,
    `branch.${b}.dec_heads = ()`,
    `branch.${b}.dec_patch = ()`,
    `branch.${b}.stride = ()`,
    `branch.${b}.y_schedule = ()`,
  ]),
].join("\n") + "\n";

export function withSeed(configText: string, seed: number): string {
  return configText.replace(/^seed = .*$/m, `seed = ${seed}`);
}

export function readEventsCsv(path: string): EventRecord[] {
  // the CLI's writer emits \r\n, the hand-written fixture \n
  const lines = readFileSync(path, "utf8").trim().split(/\r?\n/);
  if (lines[0] !== "t,h,w,p") {
    throw new Error(`${path}: unexpected header ${lines[0]}`);
  }
  return lines.slice(1).map((line) => {
    const [t, h, w, p] = line.split(",");
    return { t: Number(t), h: Number(h), w: Number(w), p: Number(p) };
  });
}

/**
 * Reference path: run the CLI on a fixture file directly and return the
 * raw OMNX file bytes. `configText === null` runs with no --config at all.
 */
export function cliTensorizeFile(inputPath: string, configText: string | null): Uint8Array {
  const workDir = mkdtempSync(join(tmpdir(), "omnievent-ref-"));
  try {
    const outputPath = join(workDir, "ref.omnx");
    const args = ["tensorize", "--in", inputPath, "--out", outputPath];
    if (configText !== null) {
      const configPath = join(workDir, "ref.cfg");
      writeFileSync(configPath, configText, "utf8");
      args.push("--config", configPath);
    }
    const proc = runCli(args);
    if (proc.status !== 0) {
      throw new Error(`reference CLI run failed (${proc.status}): ${proc.stderr}`);
    }
    return new Uint8Array(readFileSync(outputPath));
  } finally {
    rmSync(workDir, { recursive: true, force: true });
  }
}
