/**
 * The wire protocol of the projection server: message shapes, parsing with
 * validation, and the pitch arithmetic shared by the keyboard and the lanes.
 *
 * This module is deliberately free of DOM and WebSocket references so every
 * contract in it can be tested as plain data.
 */

export const PIANO_LOW = 21; // A0
export const PIANO_HIGH = 108; // C8
export const MIDDLE_C = 60;

export type OutputMode = "sample" | "mean-field";

export interface SamplingSettings {
  gibbs_steps: number;
  seed: number;
  output_mode: OutputMode;
  threshold: number;
}

export type ClientMessage =
  | { type: "note_on"; pitch: number; velocity?: number; pulse?: boolean }
  | { type: "note_off"; pitch: number; pulse?: boolean }
  | { type: "piano_frame"; pitches: number[]; pulse?: boolean }
  | { type: "pulse" }
  | { type: "set_model"; model_id: string }
  | ({ type: "set_sampling" } & Partial<SamplingSettings>)
  | { type: "reset" };

export interface OrchestraFrame {
  type: "orchestra_frame";
  frame: number;
  parts: Record<string, number[]>;
  latency_ms: number;
  over_budget?: boolean;
}

export interface Ack {
  type: "ack";
  request?: string;
  warning?: string;
  models?: string[];
  model_id?: string;
  kind?: string;
  orchestra_dim?: number;
  sampling?: SamplingSettings;
}

export interface ErrorReply {
  type: "error";
  detail: string;
}

export type ServerMessage = OrchestraFrame | Ack | ErrorReply;

export interface ModelInfo {
  model_id: string;
  kind: string;
  quantization: number;
  n_past: number;
  orchestra_dim: number;
}

export function encode(message: ClientMessage): string {
  return JSON.stringify(message);
}

/** Parse one server message, rejecting anything that violates the protocol. */
export function parseServerMessage(raw: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new Error(`server sent invalid JSON: ${raw.slice(0, 80)}`);
  }
  if (typeof data !== "object" || data === null || Array.isArray(data)) {
    throw new Error("server message is not an object");
  }
  const msg = data as Record<string, unknown>;
  switch (msg.type) {
    case "orchestra_frame": {
      if (typeof msg.frame !== "number" || typeof msg.latency_ms !== "number") {
        throw new Error("orchestra_frame missing frame/latency_ms");
      }
      const parts = msg.parts;
      if (typeof parts !== "object" || parts === null || Array.isArray(parts)) {
        throw new Error("orchestra_frame.parts must be an object");
      }
      for (const [name, pitches] of Object.entries(parts)) {
        if (!Array.isArray(pitches) || pitches.some((p) => typeof p !== "number")) {
          throw new Error(`part ${name} holds a non-numeric pitch list`);
        }
      }
      return msg as unknown as OrchestraFrame;
    }
    case "ack":
      return msg as unknown as Ack;
    case "error": {
      if (typeof msg.detail !== "string") {
        throw new Error("error reply without detail");
      }
      return msg as unknown as ErrorReply;
    }
    default:
      throw new Error(`unknown server message type ${String(msg.type)}`);
  }
}

export function isPlayable(pitch: number): boolean {
  return Number.isInteger(pitch) && pitch >= PIANO_LOW && pitch <= PIANO_HIGH;
}

const NOTE_NAMES = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];

/** Scientific pitch name for a MIDI number (60 -> "C4"). */
export function pitchName(pitch: number): string {
  const octave = Math.floor(pitch / 12) - 1;
  return `${NOTE_NAMES[((pitch % 12) + 12) % 12]}${octave}`;
}

export function midiToHz(pitch: number): number {
  return 440 * Math.pow(2, (pitch - 69) / 12);
}

/** White keys carry the visual keyboard; black keys float between them. */
export function isBlackKey(pitch: number): boolean {
  return [1, 3, 6, 8, 10].includes(((pitch % 12) + 12) % 12);
}

type FetchLike = (url: string) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export async function fetchModels(baseUrl: string, fetchImpl?: FetchLike): Promise<ModelInfo[]> {
  const doFetch = fetchImpl ?? (fetch as unknown as FetchLike);
  const response = await doFetch(`${baseUrl}/models`);
  if (!response.ok) {
    throw new Error(`GET /models failed with status ${response.status}`);
  }
  const body = (await response.json()) as { models?: unknown };
  if (!Array.isArray(body.models)) {
    throw new Error("GET /models returned no model list");
  }
  return body.models as ModelInfo[];
}
