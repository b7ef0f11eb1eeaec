// C-style bridge: status-code returns, caller-allocated out descriptors,
// and integer handles that must be released explicitly. Each call works in
// its own temp directory and the handle table never reuses ids, so calls
// do not interfere and concurrent use with independent handles is safe.

import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { ExternEventBuffer, RECORD_SIZE, encodeEvt1 } from "./events";
import { OmnxDtype, OmnxTensor, TensorData, parseOmnx } from "./omnx";
import { runCli } from "./runner";

export const STATUS_OK = 0;
export const STATUS_INVALID_INPUT = 1;
export const STATUS_CONFIG_ERROR = 2;
export const STATUS_IO_ERROR = 3;
export const STATUS_INTERNAL = 4;

const STATUS_NAMES: Record<number, string> = {
  [STATUS_OK]: "ok",
  [STATUS_INVALID_INPUT]: "invalid-input",
  [STATUS_CONFIG_ERROR]: "config-error",
  [STATUS_IO_ERROR]: "io-error",
  [STATUS_INTERNAL]: "internal-error",
};

export function statusName(code: number): string {
  return STATUS_NAMES[code] ?? `unknown-status-${code}`;
}

/**
 * Out parameter for {@link externTensorize}; allocate with
 * {@link newDescriptor} and read the fields after the call returns 0.
 * On failure `handle` stays 0 and `message` carries the error string.
 */
export interface OutDescriptor {
  dtype: OmnxDtype | "";
  rank: number;
  dims: number[];
  handle: number;
  message: string;
}

export function newDescriptor(): OutDescriptor {
  return { dtype: "", rank: 0, dims: [], handle: 0, message: "" };
}

const results = new Map<number, OmnxTensor>();
let nextHandle = 1; // ids are never reused

function fail(out: OutDescriptor, status: number, message: string): number {
  out.dtype = "";
  out.rank = 0;
  out.dims = [];
  out.handle = 0;
  out.message = message;
  return status;
}

/**
 * Run the full pipeline on an event buffer and a config text.
 *
 * Fills `out` with the result tensor's dtype, rank, dims and a fresh
 * handle whose payload is byte-identical to what `omnievent tensorize`
 * writes for the same events, config, and seed. Returns 0 on success or a
 * non-zero status with `out.message` set. The input buffer is only read;
 * ownership stays with the caller.
 */
export function externTensorize(
  buffer: ExternEventBuffer,
  configText: string,
  out: OutDescriptor,
): number {
  if (buffer.count === 0) {
    return fail(out, STATUS_INVALID_INPUT, "empty event buffer");
  }
  if (buffer.bytes.byteLength !== buffer.count * RECORD_SIZE) {
    return fail(
      out,
      STATUS_INVALID_INPUT,
      `buffer holds ${buffer.bytes.byteLength} bytes but count=${buffer.count} ` +
        `needs ${buffer.count * RECORD_SIZE}`,
    );
  }

  const workDir = mkdtempSync(join(tmpdir(), "omnievent-bridge-"));
  try {
    const eventsPath = join(workDir, "events.evt1");
    const configPath = join(workDir, "config.cfg");
    const outputPath = join(workDir, "out.omnx");
    writeFileSync(eventsPath, encodeEvt1(buffer));
    writeFileSync(configPath, configText, "utf8");

    const proc = runCli([
      "tensorize",
      "--in", eventsPath,
      "--out", outputPath,
      "--config", configPath,
    ]);
    if (proc.status === null) {
      return fail(out, STATUS_IO_ERROR, `could not launch the omnievent CLI: ${proc.stderr.trim()}`);
    }
    if (proc.status !== 0) {
      const message = proc.stderr.trim() || `tensorize exited with status ${proc.status}`;
      if (proc.status === 2) return fail(out, STATUS_CONFIG_ERROR, message);
      if (proc.status === 3) return fail(out, STATUS_IO_ERROR, message);
      return fail(out, STATUS_INTERNAL, message);
    }

    const tensor = parseOmnx(new Uint8Array(readFileSync(outputPath)));
    const handle = nextHandle++;
    results.set(handle, tensor);
    out.dtype = tensor.dtype;
    out.rank = tensor.dims.length;
    out.dims = [...tensor.dims];
    out.handle = handle;
    out.message = "";
    return STATUS_OK;
  } catch (err) {
    return fail(out, STATUS_INTERNAL, String(err));
  } finally {
    rmSync(workDir, { recursive: true, force: true });
  }
}

function lookup(handle: number): OmnxTensor {
  const tensor = results.get(handle);
  if (tensor === undefined) {
    throw new RangeError(`unknown result handle ${handle}`);
  }
  return tensor;
}

/** Raw row-major payload bytes for a live handle (identical to the OMNX payload). */
export function payloadBytes(handle: number): Uint8Array {
  return lookup(handle).payload;
}

/** The payload decoded as its native typed array. */
export function tensorData(handle: number): TensorData {
  return lookup(handle).data;
}

/** Free a result. Handles are single-use: releasing twice is an error. */
export function release(handle: number): void {
  if (!results.delete(handle)) {
    throw new RangeError(`unknown result handle ${handle}`);
  }
}

export function openHandleCount(): number {
  return results.size;
}
