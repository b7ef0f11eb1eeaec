import { join } from "node:path";
import { afterEach, describe, expect, it } from "vitest";

import {
  STATUS_CONFIG_ERROR,
  STATUS_INVALID_INPUT,
  STATUS_IO_ERROR,
  STATUS_OK,
  externTensorize,
  newDescriptor,
  openHandleCount,
  payloadBytes,
  release,
  statusName,
  tensorData,
} from "../src/bridge";
import { allocEventBuffer, decodeEvt1, eventBufferFrom } from "../src/events";
import { FAST_CONFIG, FIXTURES, readEventsCsv, withSeed } from "./helpers";
import { readFileSync } from "node:fs";

const tenEvents = () => readEventsCsv(join(FIXTURES, "ten_events.csv"));

afterEach(() => {
  delete process.env.OMNIEVENT_BIN;
});

describe("externTensorize status codes", () => {
  it("maps an empty buffer to invalid-input", () => {
    const out = newDescriptor();
    const before = openHandleCount();
    const status = externTensorize(allocEventBuffer(0), FAST_CONFIG, out);
    expect(status).toBe(STATUS_INVALID_INPUT);
    expect(statusName(status)).toBe("invalid-input");
    expect(out.message).toMatch(/empty event buffer/);
    expect(out.handle).toBe(0);
    expect(openHandleCount()).toBe(before);
  });

  it("maps a count/length mismatch to invalid-input", () => {
    const buffer = allocEventBuffer(2);
    buffer.count = 3; // lie about the length
    const out = newDescriptor();
    expect(externTensorize(buffer, FAST_CONFIG, out)).toBe(STATUS_INVALID_INPUT);
    expect(out.message).toMatch(/26 bytes but count=3/);
  });

  it("maps a malformed config to config-error with the CLI's message", () => {
    const out = newDescriptor();
    const status = externTensorize(
      eventBufferFrom(tenEvents()),
      "geometry.H = not-a-number\n",
      out,
    );
    expect(status).toBe(STATUS_CONFIG_ERROR);
    expect(out.message).toMatch(/config error: line 1/);
    expect(out.handle).toBe(0);
  });

  it("maps an unknown config key to config-error", () => {
    const out = newDescriptor();
    const status = externTensorize(eventBufferFrom(tenEvents()), "no.such.key = 1\n", out);
    expect(status).toBe(STATUS_CONFIG_ERROR);
    expect(out.message.length).toBeGreaterThan(0);
  });

  it("maps a broken executable override to io-error", () => {
    process.env.OMNIEVENT_BIN = "/no/such/binary";
    const out = newDescriptor();
    const status = externTensorize(eventBufferFrom(tenEvents()), FAST_CONFIG, out);
    expect(status).toBe(STATUS_IO_ERROR);
    expect(out.message).toMatch(/could not launch/);
  });
});

describe("handle lifecycle", () => {
  it("success fills the descriptor and the handle serves payload and data", () => {
    const out = newDescriptor();
    const status = externTensorize(eventBufferFrom(tenEvents()), FAST_CONFIG, out);
    expect(status).toBe(STATUS_OK);
    expect(out.handle).toBeGreaterThanOrEqual(1);
    expect(out.dtype).toBe("f32");
    expect(out.rank).toBe(3);
    expect(out.dims).toEqual([64, 64, 20]);
    expect(out.message).toBe("");

    const payload = payloadBytes(out.handle);
    const data = tensorData(out.handle);
    expect(payload.byteLength).toBe(64 * 64 * 20 * 4);
    expect(data.length).toBe(64 * 64 * 20);

    release(out.handle);
    expect(() => payloadBytes(out.handle)).toThrow(/unknown result handle/);
    expect(() => release(out.handle)).toThrow(/unknown result handle/);
  });

  it("sequential calls with different configs do not interfere", () => {
    const events = eventBufferFrom(tenEvents());
    const a = newDescriptor();
    const b = newDescriptor();
    expect(externTensorize(events, withSeed(FAST_CONFIG, 5), a)).toBe(STATUS_OK);
    const aBefore = Buffer.from(payloadBytes(a.handle)).toString("base64");

    expect(externTensorize(events, withSeed(FAST_CONFIG, 9), b)).toBe(STATUS_OK);
    expect(b.handle).not.toBe(a.handle);

    // the second call must not disturb the first result
    const aAfter = Buffer.from(payloadBytes(a.handle)).toString("base64");
    expect(aAfter).toBe(aBefore);
    // different seeds give different tensors
    expect(Buffer.compare(Buffer.from(payloadBytes(a.handle)), Buffer.from(payloadBytes(b.handle)))).not.toBe(0);

    release(b.handle);
    // releasing b leaves a readable
    expect(payloadBytes(a.handle).byteLength).toBe(64 * 64 * 20 * 4);
    release(a.handle);
  });

  it("the caller keeps ownership: the input buffer is untouched", () => {
    const buffer = decodeEvt1(new Uint8Array(readFileSync(join(FIXTURES, "ten_events.evt1"))));
    const snapshot = buffer.bytes.slice();
    const out = newDescriptor();
    expect(externTensorize(buffer, FAST_CONFIG, out)).toBe(STATUS_OK);
    release(out.handle);
    expect(Buffer.compare(Buffer.from(buffer.bytes), Buffer.from(snapshot))).toBe(0);
  });
});
