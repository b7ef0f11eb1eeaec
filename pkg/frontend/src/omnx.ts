// OMNX single-tensor container: "OMNX", u8 dtype code, u8 rank,
// rank x u32 dims, then the row-major little-endian payload.

export const OMNX_MAGIC = [0x4f, 0x4d, 0x4e, 0x58] as const; // "OMNX"

export type OmnxDtype = "f32" | "f64" | "i64";

const DTYPE_BY_CODE: Record<number, OmnxDtype> = { 1: "f32", 2: "f64", 3: "i64" };

const ITEM_SIZE: Record<OmnxDtype, number> = { f32: 4, f64: 8, i64: 8 };

export type TensorData = Float32Array | Float64Array | BigInt64Array;

export interface OmnxTensor {
  dtype: OmnxDtype;
  dims: number[];
  /** raw payload bytes, exactly as stored after the header */
  payload: Uint8Array;
  /** payload decoded as the matching typed array (row-major) */
  data: TensorData;
}

function toTypedArray(dtype: OmnxDtype, payload: Uint8Array): TensorData {
  // copy into a fresh ArrayBuffer: payload offsets are rarely aligned
  const copy = payload.slice().buffer;
  switch (dtype) {
    case "f32":
      return new Float32Array(copy);
    case "f64":
      return new Float64Array(copy);
    case "i64":
      return new BigInt64Array(copy);
  }
}

export function parseOmnx(bytes: Uint8Array): OmnxTensor {
  if (bytes.byteLength < 6 || !OMNX_MAGIC.every((b, i) => bytes[i] === b)) {
    throw new RangeError("not an OMNX payload");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const code = view.getUint8(4);
  const dtype = DTYPE_BY_CODE[code];
  if (dtype === undefined) {
    throw new RangeError(`unknown OMNX dtype code ${code}`);
  }
  const rank = view.getUint8(5);
  const headerEnd = 6 + 4 * rank;
  if (bytes.byteLength < headerEnd) {
    throw new RangeError("OMNX header truncated");
  }
  const dims: number[] = [];
  for (let i = 0; i < rank; i++) {
    dims.push(view.getUint32(6 + 4 * i, true));
  }
  const elements = dims.reduce((a, b) => a * b, 1);
  const expected = headerEnd + elements * ITEM_SIZE[dtype];
  if (bytes.byteLength !== expected) {
    throw new RangeError(
      `OMNX payload has ${bytes.byteLength} bytes, expected ${expected}`,
    );
  }
  const payload = bytes.slice(headerEnd);
  return { dtype, dims, payload, data: toTypedArray(dtype, payload) };
}
