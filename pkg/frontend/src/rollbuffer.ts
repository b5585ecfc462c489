/**
 * The scrolling orchestra display model: a bounded ring of the last N
 * columns, one per received frame, with a lane per instrument part.
 *
 * Lanes appear dynamically the first time a part name shows up and keep
 * their first-appearance order afterwards, so the display never reshuffles
 * under the player's eyes.  A reset clears the columns behind a barline
 * marker but keeps the lane roster.
 */

import type { OrchestraFrame } from "./protocol.js";

export interface Column {
  frame: number;
  parts: Record<string, number[]>;
  /** True on the first column after a reset. */
  barline: boolean;
}

export class RollBuffer {
  readonly capacity: number;
  private cols: Column[] = [];
  private laneOrder: string[] = [];
  private barlinePending = false;

  constructor(capacity = 256) {
    if (!Number.isInteger(capacity) || capacity < 1) {
      throw new Error(`capacity must be a positive integer, got ${capacity}`);
    }
    this.capacity = capacity;
  }

  lanes(): readonly string[] {
    return this.laneOrder;
  }

  columns(): readonly Column[] {
    return this.cols;
  }

  lastFrame(): number {
    const last = this.cols[this.cols.length - 1];
    return last ? last.frame : -1;
  }

  /** Append one frame; frames must arrive in strictly increasing order. */
  push(frame: OrchestraFrame): void {
    if (frame.frame <= this.lastFrame()) {
      throw new Error(
        `frame ${frame.frame} arrived after frame ${this.lastFrame()}; ` +
          "columns must stay in order",
      );
    }
    for (const name of Object.keys(frame.parts)) {
      if (!this.laneOrder.includes(name)) {
        this.laneOrder.push(name);
      }
    }
    this.cols.push({
      frame: frame.frame,
      parts: frame.parts,
      barline: this.barlinePending,
    });
    this.barlinePending = false;
    if (this.cols.length > this.capacity) {
      this.cols.splice(0, this.cols.length - this.capacity);
    }
  }

  /** Clear the past behind a barline; lanes and capacity survive. */
  reset(): void {
    this.cols = [];
    this.barlinePending = true;
  }

  /** Pitches lit in one lane for one column (empty when the part is silent). */
  cell(part: string, columnIndex: number): number[] {
    const column = this.cols[columnIndex];
    return column?.parts[part] ?? [];
  }
}
