/**
 * DOM layer: the on-screen 88-key keyboard, per-part orchestra lanes, the
 * control panel, and the status strip.  Everything is plain DOM so the
 * console ships as one HTML file plus compiled modules — no framework.
 *
 * Hardware MIDI is attached when the browser exposes Web MIDI; the
 * on-screen keyboard is always available as the fallback instrument.
 */

import { PIANO_HIGH, PIANO_LOW, isBlackKey, pitchName, type OrchestraFrame } from "./protocol.js";
import type { RollBuffer } from "./rollbuffer.js";
import type { ConsoleSession } from "./session.js";
import type { ConsoleState } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Build the 88-key keyboard; key transitions drive the session. */
export function buildKeyboard(session: ConsoleSession): HTMLElement {
  const container = el("div", "keyboard");
  container.setAttribute("role", "application");
  container.setAttribute("aria-label", "piano keyboard");
  for (let pitch = PIANO_LOW; pitch <= PIANO_HIGH; pitch++) {
    const key = el("div", isBlackKey(pitch) ? "key black" : "key white");
    key.dataset.pitch = String(pitch);
    key.title = pitchName(pitch);
    key.addEventListener("pointerdown", (event) => {
      event.preventDefault();
      key.classList.add("held");
      session.keyDown(pitch);
    });
    const release = () => {
      key.classList.remove("held");
      session.keyUp(pitch);
    };
    key.addEventListener("pointerup", release);
    key.addEventListener("pointerleave", release);
    container.appendChild(key);
  }
  return container;
}

/**
 * Render the roll buffer into a lane per part.  Lanes are created on first
 * appearance (unknown parts simply become new lanes) and cleared columns
 * leave a barline marker behind.
 */
export function renderLanes(container: HTMLElement, roll: RollBuffer): void {
  for (const part of roll.lanes()) {
    if (!container.querySelector(`[data-part="${part}"]`)) {
      const lane = el("div", "lane");
      lane.dataset.part = part;
      lane.appendChild(el("span", "lane-label", part));
      lane.appendChild(el("div", "lane-cols"));
      container.appendChild(lane);
    }
  }
  const columns = roll.columns();
  for (const lane of Array.from(container.querySelectorAll<HTMLElement>(".lane"))) {
    const part = lane.dataset.part ?? "";
    const cols = lane.querySelector<HTMLElement>(".lane-cols");
    if (!cols) continue;
    cols.textContent = "";
    for (let i = 0; i < columns.length; i++) {
      const column = columns[i];
      if (!column) continue;
      const pitches = column.parts[part] ?? [];
      const cell = el("div", "col");
      if (column.barline) cell.classList.add("barline");
      if (pitches.length > 0) {
        cell.classList.add("on");
        cell.dataset.pitches = pitches.join(",");
        cell.style.opacity = String(Math.min(1, 0.35 + 0.18 * pitches.length));
      }
      cell.dataset.frame = String(column.frame);
      cols.appendChild(cell);
    }
  }
}

export interface ControlRefs {
  modelSelect: HTMLSelectElement;
  gibbsInput: HTMLInputElement;
  thresholdInput: HTMLInputElement;
  seedInput: HTMLInputElement;
  modeSelect: HTMLSelectElement;
  applyButton: HTMLButtonElement;
  resetButton: HTMLButtonElement;
  pulseButton: HTMLButtonElement;
  autoPulse: HTMLInputElement;
}

/** The model/sampling panel; edits only reach the UI via server acks. */
export function buildControls(session: ConsoleSession): { panel: HTMLElement; refs: ControlRefs } {
  const panel = el("div", "controls");

  const modelSelect = el("select");
  modelSelect.addEventListener("change", () => session.setModel(modelSelect.value));

  const gibbsInput = el("input");
  gibbsInput.type = "number";
  gibbsInput.min = "1";
  const thresholdInput = el("input");
  thresholdInput.type = "number";
  thresholdInput.step = "0.05";
  const seedInput = el("input");
  seedInput.type = "number";
  const modeSelect = el("select");
  for (const mode of ["mean-field", "sample"]) {
    const option = el("option", undefined, mode);
    option.value = mode;
    modeSelect.appendChild(option);
  }

  const applyButton = el("button", undefined, "apply sampling");
  applyButton.addEventListener("click", () => {
    session.setSampling({
      gibbs_steps: Number(gibbsInput.value),
      threshold: Number(thresholdInput.value),
      seed: Number(seedInput.value),
      output_mode: modeSelect.value as "sample" | "mean-field",
    });
  });

  const resetButton = el("button", undefined, "reset");
  resetButton.addEventListener("click", () => session.reset());

  const pulseButton = el("button", undefined, "pulse");
  pulseButton.addEventListener("click", () => session.pulse());

  const autoPulse = el("input");
  autoPulse.type = "checkbox";
  let timer: ReturnType<typeof setInterval> | null = null;
  autoPulse.addEventListener("change", () => {
    if (autoPulse.checked) {
      timer = setInterval(() => session.pulse(), 125);
    } else if (timer) {
      clearInterval(timer);
      timer = null;
    }
  });

  const row = (label: string, node: HTMLElement) => {
    const wrap = el("label", "control");
    wrap.appendChild(el("span", undefined, label));
    wrap.appendChild(node);
    return wrap;
  };
  panel.appendChild(row("model", modelSelect));
  panel.appendChild(row("gibbs steps", gibbsInput));
  panel.appendChild(row("threshold", thresholdInput));
  panel.appendChild(row("seed", seedInput));
  panel.appendChild(row("output", modeSelect));
  panel.appendChild(applyButton);
  panel.appendChild(resetButton);
  panel.appendChild(pulseButton);
  panel.appendChild(row("auto-pulse (8/s)", autoPulse));

  return {
    panel,
    refs: {
      modelSelect, gibbsInput, thresholdInput, seedInput, modeSelect,
      applyButton, resetButton, pulseButton, autoPulse,
    },
  };
}

/** Reflect ack'd state into the panel without clobbering an edit in progress. */
export function syncControls(refs: ControlRefs, state: ConsoleState): void {
  const ids = state.models;
  if (refs.modelSelect.options.length !== ids.length) {
    refs.modelSelect.textContent = "";
    for (const id of ids) {
      const option = document.createElement("option");
      option.value = id;
      option.textContent = id;
      refs.modelSelect.appendChild(option);
    }
  }
  if (state.modelId !== null) refs.modelSelect.value = state.modelId;
  if (state.sampling && document.activeElement !== refs.gibbsInput) {
    refs.gibbsInput.value = String(state.sampling.gibbs_steps);
  }
  if (state.sampling && document.activeElement !== refs.thresholdInput) {
    refs.thresholdInput.value = String(state.sampling.threshold);
  }
  if (state.sampling && document.activeElement !== refs.seedInput) {
    refs.seedInput.value = String(state.sampling.seed);
  }
  if (state.sampling) refs.modeSelect.value = state.sampling.output_mode;
}

export interface StatusRefs {
  strip: HTMLElement;
  phase: HTMLElement;
  model: HTMLElement;
  latency: HTMLElement;
  banner: HTMLElement;
  toasts: HTMLElement;
}

export function buildStatus(): StatusRefs {
  const strip = el("div", "status");
  const phase = el("span", "phase", "disconnected");
  const model = el("span", "model", "no model");
  const latency = el("span", "latency", "–");
  const banner = el("div", "banner");
  banner.hidden = true;
  const toasts = el("div", "toasts");
  strip.append(phase, model, latency);
  return { strip, phase, model, latency, banner, toasts };
}

export function syncStatus(refs: StatusRefs, state: ConsoleState): void {
  refs.phase.textContent = state.phase;
  refs.model.textContent = state.modelId
    ? `${state.modelId}${state.modelKind ? ` (${state.modelKind})` : ""}`
    : "no model";
  refs.latency.textContent =
    state.latencyMs === null
      ? "–"
      : `${state.latencyMs.toFixed(1)} ms${state.overBudget ? " OVER BUDGET" : ""}`;
  refs.latency.classList.toggle("over", state.overBudget);
  refs.banner.hidden = state.banner === null;
  refs.banner.textContent = state.banner ?? "";
  refs.toasts.textContent = "";
  for (const toast of state.toasts.slice(-3)) {
    refs.toasts.appendChild(el("div", "toast", toast));
  }
}

interface MidiLike {
  inputs: Map<string, { onmidimessage: ((e: { data: Uint8Array }) => void) | null }>;
}

/** Attach hardware MIDI when the browser provides it; silently optional. */
export async function attachWebMidi(session: ConsoleSession): Promise<boolean> {
  const nav = navigator as Navigator & {
    requestMIDIAccess?: () => Promise<MidiLike>;
  };
  if (!nav.requestMIDIAccess) return false;
  try {
    const access = await nav.requestMIDIAccess();
    for (const input of access.inputs.values()) {
      input.onmidimessage = (event) => {
        const data = event.data;
        if (!data) return;
        const status = (data[0] ?? 0) & 0xf0;
        const pitch = data[1] ?? 0;
        const velocity = data[2] ?? 0;
        if (status === 0x90 && velocity > 0) session.keyDown(pitch, velocity);
        else if (status === 0x80 || (status === 0x90 && velocity === 0)) session.keyUp(pitch);
      };
    }
    return true;
  } catch {
    return false;
  }
}
