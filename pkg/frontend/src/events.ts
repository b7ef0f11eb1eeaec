// Event record layout shared with the EVT1 binary format: little-endian
// (f64 t, u16 h, u16 w, i8 p), 13 bytes per record, no padding.

export const RECORD_SIZE = 13;
export const EVT1_MAGIC = [0x45, 0x56, 0x54, 0x31] as const; // "EVT1"

const LITTLE_ENDIAN_HOST =
  new Uint16Array(new Uint8Array([1, 0]).buffer)[0] === 1;
if (!LITTLE_ENDIAN_HOST) {
  throw new Error("omnievent-frontend requires a little-endian host");
}

export interface EventRecord {
  /** timestamp in seconds */
  t: number;
  /** pixel row, 0..65535 */
  h: number;
  /** pixel column, 0..65535 */
  w: number;
  /** polarity, stored as a signed byte */
  p: number;
}

/**
 * Contiguous event records plus a count, bit-identical to the EVT1 record
 * layout on disk. The caller owns `bytes`: nothing in this package retains
 * a reference to the buffer or frees it.
 */
export interface ExternEventBuffer {
  count: number;
  bytes: Uint8Array;
}

export function allocEventBuffer(count: number): ExternEventBuffer {
  if (!Number.isInteger(count) || count < 0) {
    throw new RangeError(`event count must be a non-negative integer, got ${count}`);
  }
  return { count, bytes: new Uint8Array(count * RECORD_SIZE) };
}

function viewOf(buffer: ExternEventBuffer): DataView {
  const { count, bytes } = buffer;
  if (bytes.byteLength !== count * RECORD_SIZE) {
    throw new RangeError(
      `buffer holds ${bytes.byteLength} bytes but count=${count} needs ${count * RECORD_SIZE}`,
    );
  }
  return new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
}

export function writeEvent(buffer: ExternEventBuffer, index: number, ev: EventRecord): void {
  if (!Number.isInteger(index) || index < 0 || index >= buffer.count) {
    throw new RangeError(`record index ${index} out of range for count ${buffer.count}`);
  }
  if (!Number.isInteger(ev.h) || ev.h < 0 || ev.h > 0xffff) {
    throw new RangeError(`h=${ev.h} does not fit u16`);
  }
  if (!Number.isInteger(ev.w) || ev.w < 0 || ev.w > 0xffff) {
    throw new RangeError(`w=${ev.w} does not fit u16`);
  }
  if (!Number.isInteger(ev.p) || ev.p < -128 || ev.p > 127) {
    throw new RangeError(`p=${ev.p} does not fit i8`);
  }
  const view = viewOf(buffer);
  const base = index * RECORD_SIZE;
  view.setFloat64(base, ev.t, true);
  view.setUint16(base + 8, ev.h, true);
  view.setUint16(base + 10, ev.w, true);
  view.setInt8(base + 12, ev.p);
}

export function readEvent(buffer: ExternEventBuffer, index: number): EventRecord {
  if (!Number.isInteger(index) || index < 0 || index >= buffer.count) {
    throw new RangeError(`record index ${index} out of range for count ${buffer.count}`);
  }
  const view = viewOf(buffer);
  const base = index * RECORD_SIZE;
  return {
    t: view.getFloat64(base, true),
    h: view.getUint16(base + 8, true),
    w: view.getUint16(base + 10, true),
    p: view.getInt8(base + 12),
  };
}

export function eventBufferFrom(events: readonly EventRecord[]): ExternEventBuffer {
  const buffer = allocEventBuffer(events.length);
  events.forEach((ev, i) => writeEvent(buffer, i, ev));
  return buffer;
}

/** Serialize a buffer as a complete EVT1 file: magic, u32 count, records. */
export function encodeEvt1(buffer: ExternEventBuffer): Uint8Array {
  viewOf(buffer); // length check
  const out = new Uint8Array(8 + buffer.bytes.byteLength);
  out.set(EVT1_MAGIC, 0);
  new DataView(out.buffer).setUint32(4, buffer.count, true);
  out.set(buffer.bytes, 8);
  return out;
}

export function decodeEvt1(bytes: Uint8Array): ExternEventBuffer {
  if (bytes.byteLength < 8 || !EVT1_MAGIC.every((b, i) => bytes[i] === b)) {
    throw new RangeError("not an EVT1 payload");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const count = view.getUint32(4, true);
  const expected = 8 + count * RECORD_SIZE;
  if (bytes.byteLength !== expected) {
    throw new RangeError(
      `EVT1 payload has ${bytes.byteLength} bytes, expected ${expected} for ${count} records`,
    );
  }
  // slice(): the decoded buffer is caller-owned, never a view into the input
  return { count, bytes: bytes.slice(8) };
}
