// @vitest-environment jsdom
import { describe, expect, it } from "vitest";
import type { OrchestraFrame } from "../src/protocol.js";
import { RollBuffer } from "../src/rollbuffer.js";
import type { ConsoleSession } from "../src/session.js";
import { initialState, type ConsoleState } from "../src/state.js";
import {
  attachWebMidi,
  buildControls,
  buildKeyboard,
  buildStatus,
  renderLanes,
  syncControls,
  syncStatus,
} from "../src/ui.js";

/** Records the calls the DOM layer makes; the session logic has its own tests. */
function recordingSession() {
  const calls: Array<[string, ...unknown[]]> = [];
  const stub = {
    keyDown: (pitch: number, velocity?: number) => calls.push(["keyDown", pitch, velocity]),
    keyUp: (pitch: number) => calls.push(["keyUp", pitch]),
    pulse: () => calls.push(["pulse"]),
    reset: () => calls.push(["reset"]),
    setModel: (id: string) => calls.push(["setModel", id]),
    setSampling: (fields: unknown) => calls.push(["setSampling", fields]),
  };
  return { calls, session: stub as unknown as ConsoleSession };
}

function frame(n: number, parts: Record<string, number[]>): OrchestraFrame {
  return { type: "orchestra_frame", frame: n, parts, latency_ms: 1 };
}

describe("keyboard", () => {
  it("builds all 88 keys with the right black/white split", () => {
    const { session } = recordingSession();
    const keyboard = buildKeyboard(session);
    expect(keyboard.querySelectorAll(".key")).toHaveLength(88);
    expect(keyboard.querySelectorAll(".key.black")).toHaveLength(36);
    expect(keyboard.querySelectorAll(".key.white")).toHaveLength(52);
    const first = keyboard.querySelector<HTMLElement>(".key");
    expect(first?.dataset.pitch).toBe("21");
    expect(first?.title).toBe("A0");
  });

  it("pointer events drive key transitions", () => {
    const { calls, session } = recordingSession();
    const keyboard = buildKeyboard(session);
    const middleC = keyboard.querySelector<HTMLElement>('[data-pitch="60"]');
    expect(middleC).not.toBeNull();
    middleC?.dispatchEvent(new Event("pointerdown"));
    expect(middleC?.classList.contains("held")).toBe(true);
    middleC?.dispatchEvent(new Event("pointerup"));
    expect(middleC?.classList.contains("held")).toBe(false);
    expect(calls).toEqual([
      ["keyDown", 60, undefined],
      ["keyUp", 60],
    ]);
  });

  it("dragging off a key releases it", () => {
    const { calls, session } = recordingSession();
    const keyboard = buildKeyboard(session);
    const key = keyboard.querySelector<HTMLElement>('[data-pitch="72"]');
    key?.dispatchEvent(new Event("pointerdown"));
    key?.dispatchEvent(new Event("pointerleave"));
    expect(calls).toEqual([
      ["keyDown", 72, undefined],
      ["keyUp", 72],
    ]);
  });
});

describe("lanes", () => {
  it("renders a lane per part with one column per frame", () => {
    const container = document.createElement("div");
    const roll = new RollBuffer(16);
    roll.push(frame(0, { violin: [60, 62], flute: [] }));
    roll.push(frame(1, { violin: [], flute: [72] }));
    renderLanes(container, roll);

    const lanes = container.querySelectorAll(".lane");
    expect(lanes).toHaveLength(2);
    expect(container.querySelector('[data-part="violin"] .lane-label')?.textContent).toBe("violin");

    const violinCols = container.querySelectorAll('[data-part="violin"] .col');
    expect(violinCols).toHaveLength(2);
    expect(violinCols[0]?.classList.contains("on")).toBe(true);
    expect((violinCols[0] as HTMLElement).dataset.pitches).toBe("60,62");
    expect(violinCols[1]?.classList.contains("on")).toBe(false);

    const fluteCols = container.querySelectorAll('[data-part="flute"] .col');
    expect(fluteCols[1]?.classList.contains("on")).toBe(true);
  });

  it("re-rendering updates in place instead of duplicating lanes", () => {
    const container = document.createElement("div");
    const roll = new RollBuffer(16);
    roll.push(frame(0, { violin: [60] }));
    renderLanes(container, roll);
    roll.push(frame(1, { violin: [62], cello: [36] }));
    renderLanes(container, roll);
    expect(container.querySelectorAll(".lane")).toHaveLength(2);
    expect(container.querySelectorAll('[data-part="violin"] .col')).toHaveLength(2);
  });

  it("marks the first column after a reset with a barline", () => {
    const container = document.createElement("div");
    const roll = new RollBuffer(16);
    roll.push(frame(0, { violin: [60] }));
    roll.reset();
    roll.push(frame(1, { violin: [64] }));
    renderLanes(container, roll);
    const col = container.querySelector('[data-part="violin"] .col');
    expect(col?.classList.contains("barline")).toBe(true);
  });
});

describe("controls", () => {
  it("model changes and button clicks reach the session", () => {
    const { calls, session } = recordingSession();
    const { panel, refs } = buildControls(session);
    document.body.appendChild(panel);

    syncControls(refs, { ...initialState(), models: ["crbm", "fgcrbm"], modelId: "crbm" });
    refs.modelSelect.value = "fgcrbm";
    refs.modelSelect.dispatchEvent(new Event("change"));

    refs.gibbsInput.value = "9";
    refs.thresholdInput.value = "0.4";
    refs.seedInput.value = "3";
    refs.modeSelect.value = "sample";
    refs.applyButton.click();
    refs.resetButton.click();
    refs.pulseButton.click();

    expect(calls).toEqual([
      ["setModel", "fgcrbm"],
      ["setSampling", { gibbs_steps: 9, threshold: 0.4, seed: 3, output_mode: "sample" }],
      ["reset"],
      ["pulse"],
    ]);
    panel.remove();
  });

  it("controls reflect the last acknowledged server values", () => {
    const { session } = recordingSession();
    const { refs } = buildControls(session);
    const state: ConsoleState = {
      ...initialState(),
      models: ["crbm", "fgcrbm"],
      modelId: "fgcrbm",
      sampling: { gibbs_steps: 25, seed: 4, output_mode: "sample", threshold: 0.6 },
    };
    syncControls(refs, state);
    expect(Array.from(refs.modelSelect.options).map((o) => o.value)).toEqual(["crbm", "fgcrbm"]);
    expect(refs.modelSelect.value).toBe("fgcrbm");
    expect(refs.gibbsInput.value).toBe("25");
    expect(refs.thresholdInput.value).toBe("0.6");
    expect(refs.seedInput.value).toBe("4");
    expect(refs.modeSelect.value).toBe("sample");
  });
});

describe("status strip", () => {
  it("shows phase, model, latency, and the over-budget flag", () => {
    const refs = buildStatus();
    syncStatus(refs, {
      ...initialState(),
      phase: "playing",
      modelId: "crbm",
      modelKind: "crbm",
      latencyMs: 42.31,
      overBudget: true,
    });
    expect(refs.phase.textContent).toBe("playing");
    expect(refs.model.textContent).toBe("crbm (crbm)");
    expect(refs.latency.textContent).toContain("42.3 ms");
    expect(refs.latency.textContent).toContain("OVER BUDGET");
    expect(refs.latency.classList.contains("over")).toBe(true);
  });

  it("raises and clears the banner, and shows the last three toasts", () => {
    const refs = buildStatus();
    syncStatus(refs, { ...initialState(), banner: "connection lost" });
    expect(refs.banner.hidden).toBe(false);
    expect(refs.banner.textContent).toBe("connection lost");

    syncStatus(refs, { ...initialState(), banner: null, toasts: ["a", "b", "c", "d"] });
    expect(refs.banner.hidden).toBe(true);
    const toasts = Array.from(refs.toasts.querySelectorAll(".toast")).map((t) => t.textContent);
    expect(toasts).toEqual(["b", "c", "d"]);
  });
});

describe("hardware MIDI", () => {
  it("is skipped quietly when the browser has no Web MIDI", async () => {
    const { session } = recordingSession();
    expect(await attachWebMidi(session)).toBe(false);
  });

  it("routes note-on/note-off from a MIDI input to the session", async () => {
    const { calls, session } = recordingSession();
    const input: { onmidimessage: ((e: { data: Uint8Array }) => void) | null } = {
      onmidimessage: null,
    };
    Object.defineProperty(navigator, "requestMIDIAccess", {
      configurable: true,
      value: async () => ({ inputs: new Map([["in-0", input]]) }),
    });
    expect(await attachWebMidi(session)).toBe(true);

    input.onmidimessage?.({ data: new Uint8Array([0x90, 60, 100]) });
    input.onmidimessage?.({ data: new Uint8Array([0x80, 60, 0]) });
    input.onmidimessage?.({ data: new Uint8Array([0x90, 64, 0]) }); // running-status off
    expect(calls).toEqual([
      ["keyDown", 60, 100],
      ["keyUp", 60],
      ["keyUp", 64],
    ]);
  });
});
