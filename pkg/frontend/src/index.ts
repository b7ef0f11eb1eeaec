import {
  externTensorize,
  newDescriptor,
  release,
  statusName,
  tensorData,
} from "./bridge";
import { EventRecord, ExternEventBuffer, eventBufferFrom } from "./events";
import { OmnxDtype, TensorData } from "./omnx";

export {
  RECORD_SIZE,
  EVT1_MAGIC,
  allocEventBuffer,
  decodeEvt1,
  encodeEvt1,
  eventBufferFrom,
  readEvent,
  writeEvent,
} from "./events";
export type { EventRecord, ExternEventBuffer } from "./events";
export { OMNX_MAGIC, parseOmnx } from "./omnx";
export type { OmnxDtype, OmnxTensor, TensorData } from "./omnx";
export {
  STATUS_OK,
  STATUS_INVALID_INPUT,
  STATUS_CONFIG_ERROR,
  STATUS_IO_ERROR,
  STATUS_INTERNAL,
  externTensorize,
  newDescriptor,
  openHandleCount,
  payloadBytes,
  release,
  statusName,
  tensorData,
} from "./bridge";
export type { OutDescriptor } from "./bridge";
export { runCli } from "./runner";
export type { CliResult } from "./runner";

export class TensorizeError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(`${statusName(status)}: ${message}`);
    this.name = "TensorizeError";
  }
}

export interface GridTensor {
  dtype: OmnxDtype;
  dims: number[];
  /** row-major values; length is the product of dims */
  data: TensorData;
}

/**
 * High-level entry point: events in, grid tensor out.
 *
 * `events` is either a packed buffer or a plain record array; `config` is
 * the flat `key = value` config text ("" for defaults). Throws
 * {@link TensorizeError} with the bridge status on failure. The result is
 * detached from the handle table, so no release call is needed here.
 */
export function tensorize(
  events: ExternEventBuffer | readonly EventRecord[],
  config = "",
): GridTensor {
  const buffer = Array.isArray(events)
    ? eventBufferFrom(events as readonly EventRecord[])
    : (events as ExternEventBuffer);
  const out = newDescriptor();
  const status = externTensorize(buffer, config, out);
  if (status !== 0) {
    throw new TensorizeError(status, out.message);
  }
  try {
    // slice() detaches the result from the handle's storage
    const data = tensorData(out.handle).slice() as TensorData;
    return { dtype: out.dtype as OmnxDtype, dims: out.dims, data };
  } finally {
    release(out.handle);
  }
}
