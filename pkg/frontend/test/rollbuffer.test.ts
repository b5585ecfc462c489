import { describe, expect, it } from "vitest";
import type { OrchestraFrame } from "../src/protocol.js";
import { RollBuffer } from "../src/rollbuffer.js";

function frame(n: number, parts: Record<string, number[]>): OrchestraFrame {
  return { type: "orchestra_frame", frame: n, parts, latency_ms: 1 };
}

describe("construction", () => {
  it("rejects non-positive and fractional capacities", () => {
    for (const bad of [0, -1, 2.5]) {
      expect(() => new RollBuffer(bad)).toThrow(/positive integer/);
    }
  });

  it("starts empty", () => {
    const roll = new RollBuffer(8);
    expect(roll.columns()).toEqual([]);
    expect(roll.lanes()).toEqual([]);
    expect(roll.lastFrame()).toBe(-1);
  });
});

describe("lanes", () => {
  it("appear in first-appearance order and never reshuffle", () => {
    const roll = new RollBuffer(8);
    roll.push(frame(0, { violin: [60], cello: [36] }));
    roll.push(frame(1, { flute: [72], violin: [] }));
    roll.push(frame(2, { cello: [40] }));
    expect(roll.lanes()).toEqual(["violin", "cello", "flute"]);
  });

  it("a part never seen before simply becomes a new lane", () => {
    const roll = new RollBuffer(8);
    roll.push(frame(0, { violin: [60] }));
    roll.push(frame(1, { theremin: [80] }));
    expect(roll.lanes()).toEqual(["violin", "theremin"]);
    expect(roll.cell("theremin", 1)).toEqual([80]);
    expect(roll.cell("theremin", 0)).toEqual([]);
  });
});

describe("ordering", () => {
  it("refuses frames that run backwards or repeat", () => {
    const roll = new RollBuffer(8);
    roll.push(frame(5, { violin: [60] }));
    expect(() => roll.push(frame(5, { violin: [60] }))).toThrow(/must stay in order/);
    expect(() => roll.push(frame(2, { violin: [60] }))).toThrow(/must stay in order/);
    expect(roll.columns()).toHaveLength(1);
  });
});

describe("capacity", () => {
  it("holds exactly the last N columns through a long session", () => {
    const roll = new RollBuffer(32);
    for (let n = 0; n < 600; n++) {
      roll.push(frame(n, { violin: [60 + (n % 3)] }));
    }
    const cols = roll.columns();
    expect(cols).toHaveLength(32);
    expect(cols[0]?.frame).toBe(568);
    expect(cols[31]?.frame).toBe(599);
    expect(roll.lastFrame()).toBe(599);
  });
});

describe("reset", () => {
  it("clears columns behind a barline but keeps the lane roster", () => {
    const roll = new RollBuffer(8);
    roll.push(frame(0, { violin: [60], flute: [72] }));
    roll.reset();
    expect(roll.columns()).toEqual([]);
    expect(roll.lanes()).toEqual(["violin", "flute"]);
    roll.push(frame(1, { violin: [62] }));
    roll.push(frame(2, { violin: [64] }));
    expect(roll.columns()[0]?.barline).toBe(true);
    expect(roll.columns()[1]?.barline).toBe(false);
  });
});
