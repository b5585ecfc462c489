/**
 * Console state and the reducer that folds server messages into it.
 *
 * The state machine is disconnected -> connecting -> ready -> playing; the
 * session layer refuses to send anything outside ready/playing.  Controls
 * always reflect the last *acknowledged* server values, never optimistic
 * local edits, and frames are only handed to the display in strictly
 * increasing frame order.
 */

import type { Ack, OrchestraFrame, SamplingSettings, ServerMessage } from "./protocol.js";

export type ConnectionPhase = "disconnected" | "connecting" | "ready" | "playing";

export interface ConsoleState {
  phase: ConnectionPhase;
  /** Model ids offered by the server's hello ack. */
  models: string[];
  modelId: string | null;
  modelKind: string | null;
  orchestraDim: number | null;
  /** Last ack'd sampling settings; null until the server reports them. */
  sampling: SamplingSettings | null;
  heldNotes: ReadonlySet<number>;
  lastFrame: number;
  latencyMs: number | null;
  overBudget: boolean;
  /** Sticky connectivity banner; null when all is well. */
  banner: string | null;
  /** Transient messages (server errors, warnings) for the toast area. */
  toasts: string[];
}

export function initialState(): ConsoleState {
  return {
    phase: "disconnected",
    models: [],
    modelId: null,
    modelKind: null,
    orchestraDim: null,
    sampling: null,
    heldNotes: new Set(),
    lastFrame: -1,
    latencyMs: null,
    overBudget: false,
    banner: null,
    toasts: [],
  };
}

export interface Applied {
  state: ConsoleState;
  /** Set when the message is a frame the display should append. */
  renderFrame: OrchestraFrame | null;
  /** Set when a reset ack means the display should clear behind a barline. */
  clearDisplay: boolean;
}

function applyAck(state: ConsoleState, ack: Ack): Applied {
  let next: ConsoleState = { ...state };
  let clearDisplay = false;
  if (ack.warning) {
    next.toasts = [...next.toasts, ack.warning];
  }
  switch (ack.request) {
    case "connect":
      next = {
        ...next,
        phase: "ready",
        banner: null,
        models: ack.models ?? [],
        modelId: ack.model_id ?? next.modelId,
      };
      break;
    case "set_model":
      next.modelId = ack.model_id ?? next.modelId;
      next.modelKind = ack.kind ?? next.modelKind;
      next.orchestraDim = ack.orchestra_dim ?? next.orchestraDim;
      next.sampling = ack.sampling ?? next.sampling;
      break;
    case "set_sampling":
      next.sampling = ack.sampling ?? next.sampling;
      break;
    case "reset":
      clearDisplay = true;
      break;
    default:
      break;
  }
  return { state: next, renderFrame: null, clearDisplay };
}

export function applyServer(state: ConsoleState, message: ServerMessage): Applied {
  switch (message.type) {
    case "ack":
      return applyAck(state, message);
    case "error":
      return {
        state: { ...state, toasts: [...state.toasts, message.detail] },
        renderFrame: null,
        clearDisplay: false,
      };
    case "orchestra_frame": {
      if (message.frame <= state.lastFrame) {
        // A stale or duplicated frame must never repaint newer columns.
        return { state, renderFrame: null, clearDisplay: false };
      }
      return {
        state: {
          ...state,
          phase: "playing",
          lastFrame: message.frame,
          latencyMs: message.latency_ms,
          overBudget: Boolean(message.over_budget),
        },
        renderFrame: message,
        clearDisplay: false,
      };
    }
  }
}

export function noteDown(state: ConsoleState, pitch: number): ConsoleState {
  if (state.heldNotes.has(pitch)) return state;
  const held = new Set(state.heldNotes);
  held.add(pitch);
  return { ...state, heldNotes: held };
}

export function noteUp(state: ConsoleState, pitch: number): ConsoleState {
  if (!state.heldNotes.has(pitch)) return state;
  const held = new Set(state.heldNotes);
  held.delete(pitch);
  return { ...state, heldNotes: held };
}

export function canSend(state: ConsoleState): boolean {
  return state.phase === "ready" || state.phase === "playing";
}
