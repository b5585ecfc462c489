/**
 * The console session: one WebSocket, the console state, the scrolling
 * display buffer, and the rules between them.
 *
 * - Every key *transition* sends exactly one message while connected;
 *   key-down carries the pulse flag so held chords keep the orchestra
 *   ticking.  Input while disconnected is dropped with a visible banner.
 * - Nothing is sent before the server's hello ack (phase ready) — the state
 *   machine is disconnected -> connecting -> ready -> playing.
 * - After a reconnect the full piano state is resynced with one
 *   `piano_frame`, because the server starts every session silent.
 *
 * The transport is injected so tests can drive the session with a fake
 * socket or a real `ws` connection equally well.
 */

import {
  encode,
  isPlayable,
  parseServerMessage,
  type ClientMessage,
  type OrchestraFrame,
  type SamplingSettings,
} from "./protocol.js";
import {
  applyServer,
  canSend,
  initialState,
  noteDown,
  noteUp,
  type ConsoleState,
} from "./state.js";
import { RollBuffer } from "./rollbuffer.js";

export interface Transport {
  send(data: string): void;
  close(): void;
}

export interface TransportHandlers {
  onOpen(): void;
  onMessage(raw: string): void;
  onClose(): void;
}

export type TransportFactory = (url: string, handlers: TransportHandlers) => Transport;

export interface SessionOptions {
  rollCapacity?: number;
  onState?: (state: ConsoleState) => void;
  onFrame?: (frame: OrchestraFrame) => void;
}

export class ConsoleSession {
  state: ConsoleState = initialState();
  readonly roll: RollBuffer;
  private transport: Transport | null = null;
  private options: SessionOptions;
  private wasConnectedBefore = false;

  constructor(options: SessionOptions = {}) {
    this.options = options;
    this.roll = new RollBuffer(options.rollCapacity ?? 256);
  }

  private setState(state: ConsoleState): void {
    this.state = state;
    this.options.onState?.(state);
  }

  connect(url: string, factory: TransportFactory): void {
    this.setState({ ...this.state, phase: "connecting", banner: null });
    this.transport = factory(url, {
      onOpen: () => {
        // The server speaks first (hello ack); nothing to do yet.
      },
      onMessage: (raw) => this.handleRaw(raw),
      onClose: () => {
        this.transport = null;
        this.setState({
          ...this.state,
          phase: "disconnected",
          banner: "connection lost — input is ignored until reconnect",
        });
      },
    });
  }

  disconnect(): void {
    this.transport?.close();
    this.transport = null;
    this.setState({ ...this.state, phase: "disconnected" });
  }

  /** Parse, fold into state, and feed the display.  Junk becomes a toast. */
  handleRaw(raw: string): void {
    let applied;
    try {
      applied = applyServer(this.state, parseServerMessage(raw));
    } catch (error) {
      this.setState({
        ...this.state,
        toasts: [...this.state.toasts, String((error as Error).message ?? error)],
      });
      return;
    }
    const becameReady = this.state.phase !== "ready" && applied.state.phase === "ready";
    this.setState(applied.state);
    if (applied.clearDisplay) {
      this.roll.reset();
    }
    if (applied.renderFrame) {
      this.roll.push(applied.renderFrame);
      this.options.onFrame?.(applied.renderFrame);
    }
    if (becameReady) {
      if (this.wasConnectedBefore && this.state.heldNotes.size > 0) {
        // Reconnect with keys still held: resync the whole piano at once.
        this.send({ type: "piano_frame", pitches: [...this.state.heldNotes].sort((a, b) => a - b) });
      }
      this.wasConnectedBefore = true;
    }
  }

  private send(message: ClientMessage): boolean {
    if (!this.transport || !canSend(this.state)) {
      this.setState({
        ...this.state,
        banner: "not connected — input is ignored until reconnect",
      });
      return false;
    }
    this.transport.send(encode(message));
    return true;
  }

  /** Key-down: at most one note_on per transition, always with a pulse. */
  keyDown(pitch: number, velocity = 80): void {
    if (!isPlayable(pitch)) return;
    if (this.state.heldNotes.has(pitch)) return; // repeat, not a transition
    if (!canSend(this.state)) {
      // Dropped, not queued: stale notes must never replay on reconnect.
      this.setState({
        ...this.state,
        banner: "not connected — input is ignored until reconnect",
      });
      return;
    }
    this.setState(noteDown(this.state, pitch));
    this.send({ type: "note_on", pitch, velocity, pulse: true });
  }

  keyUp(pitch: number): void {
    if (!this.state.heldNotes.has(pitch)) return;
    this.setState(noteUp(this.state, pitch));
    this.send({ type: "note_off", pitch });
  }

  /** A bare clock pulse: tick without changing the piano. */
  pulse(): void {
    this.send({ type: "pulse" });
  }

  setModel(modelId: string): void {
    this.send({ type: "set_model", model_id: modelId });
  }

  setSampling(fields: Partial<SamplingSettings>): void {
    this.send({ type: "set_sampling", ...fields });
  }

  reset(): void {
    this.send({ type: "reset" });
  }
}
