import { describe, expect, it } from "vitest";

import {
  decodeEnvelope,
  encodeEnvelope,
  ProtocolError,
  SeqAssigner,
  SeqChecker,
} from "../src/protocol.js";

describe("envelope codec", () => {
  it("round-trips a cmd", () => {
    const line = encodeEnvelope("cmd", 3, { v: 1.25, w: -0.5 });
    const env = decodeEnvelope(line);
    expect(env.type).toBe("cmd");
    expect(env.seq).toBe(3);
    expect(env.payload).toEqual({ v: 1.25, w: -0.5 });
  });

  it("keeps field order canonical", () => {
    expect(encodeEnvelope("ping", 1, {})).toBe('{"type":"ping","seq":1,"payload":{}}');
  });

  it("rejects junk", () => {
    expect(() => decodeEnvelope("not json")).toThrow(ProtocolError);
    expect(() => decodeEnvelope('{"type":"warp","seq":0,"payload":{}}')).toThrow(ProtocolError);
    expect(() => decodeEnvelope('{"type":"cmd","seq":-1,"payload":{}}')).toThrow(ProtocolError);
    expect(() => decodeEnvelope('{"type":"cmd","seq":0,"payload":[]}')).toThrow(ProtocolError);
  });

  it("ignores unknown payload fields", () => {
    const env = decodeEnvelope('{"type":"cmd","seq":0,"payload":{"v":1,"w":0,"later":true}}');
    expect(env.payload.v).toBe(1);
  });
});

describe("sequence bookkeeping", () => {
  it("assigns consecutive outgoing numbers", () => {
    const tx = new SeqAssigner();
    expect([tx.take(), tx.take(), tx.take()]).toEqual([0, 1, 2]);
  });

  it("flags gaps and resynchronizes", () => {
    const rx = new SeqChecker();
    expect(rx.check(0)).toBe(true);
    expect(rx.check(2)).toBe(false); // gap
    expect(rx.check(3)).toBe(true); // resynced
  });
});
