import { join } from "node:path";
import { beforeAll, describe, expect, it } from "vitest";

import { parseOmnx } from "../src/omnx";
import { FAST_CONFIG, FIXTURES, cliTensorizeFile } from "./helpers";

// one CLI artifact shared across the cases below
let artifact: Uint8Array;

beforeAll(() => {
  artifact = cliTensorizeFile(join(FIXTURES, "ten_events.csv"), FAST_CONFIG);
});

describe("omnx parsing", () => {
  it("reads dtype, dims, and payload from a CLI artifact", () => {
    const tensor = parseOmnx(artifact);
    expect(tensor.dtype).toBe("f32");
    // 64x64 grid, 2*sta.channels learned + 4 statistical channels
    expect(tensor.dims).toEqual([64, 64, 20]);
    expect(tensor.payload.byteLength).toBe(64 * 64 * 20 * 4);
    expect(tensor.data).toBeInstanceOf(Float32Array);
    expect(tensor.data.length).toBe(64 * 64 * 20);
    for (const v of tensor.data as Float32Array) {
      expect(Number.isFinite(v)).toBe(true);
    }
  });

  it("decoded data matches the payload bytes exactly", () => {
    const tensor = parseOmnx(artifact);
    const roundTrip = new Uint8Array((tensor.data as Float32Array).buffer);
    expect(Buffer.compare(Buffer.from(roundTrip), Buffer.from(tensor.payload))).toBe(0);
  });

  it("rejects wrong magic, bad dtype codes, and size mismatches", () => {
    expect(() => parseOmnx(new Uint8Array([0, 1, 2, 3, 4, 5]))).toThrow(/not an OMNX/);

    const badCode = artifact.slice();
    badCode[4] = 9;
    expect(() => parseOmnx(badCode)).toThrow(/dtype code 9/);

    expect(() => parseOmnx(artifact.slice(0, artifact.length - 1))).toThrow(/expected/);

    const trailing = new Uint8Array(artifact.length + 1);
    trailing.set(artifact);
    expect(() => parseOmnx(trailing)).toThrow(/expected/);
  });
});
