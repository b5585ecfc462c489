/**
 * Audio preview: a small polyphonic synth that voices whatever the latest
 * orchestra frame holds, one oscillator per sounding (part, pitch).
 *
 * The synth talks to an injected `VoiceSink` so the voice-allocation logic
 * is testable without a browser; `webAudioSink` adapts a real AudioContext.
 * Presets are simple waveforms per instrument family — preview, not
 * orchestral rendering.
 */

import { midiToHz } from "./protocol.js";

export interface Timbre {
  wave: "sine" | "triangle" | "sawtooth" | "square";
  gain: number;
}

export interface VoiceSink {
  start(frequency: number, timbre: Timbre): unknown;
  stop(handle: unknown): void;
}

const FAMILY_PRESETS: Array<[RegExp, Timbre]> = [
  // "bassoon" must win before the string family's "bass" can claim it.
  [/bassoon/i, { wave: "triangle", gain: 0.18 }],
  [/violin|viola|cello|bass|string/i, { wave: "sawtooth", gain: 0.12 }],
  [/flute|piccolo|clarinet|oboe|wind/i, { wave: "sine", gain: 0.2 }],
  [/horn|trumpet|trombone|tuba|brass/i, { wave: "square", gain: 0.08 }],
];

export function familyTimbre(partName: string): Timbre {
  for (const [pattern, timbre] of FAMILY_PRESETS) {
    if (pattern.test(partName)) return timbre;
  }
  return { wave: "triangle", gain: 0.15 };
}

export class PolySynth {
  private sink: VoiceSink;
  private active = new Map<string, unknown>();

  constructor(sink: VoiceSink) {
    this.sink = sink;
  }

  /** Make the audio match one frame: start new voices, stop vanished ones. */
  applyFrame(parts: Record<string, number[]>): void {
    const wanted = new Set<string>();
    for (const [part, pitches] of Object.entries(parts)) {
      for (const pitch of pitches) {
        wanted.add(`${part}:${pitch}`);
      }
    }
    for (const [key, handle] of this.active) {
      if (!wanted.has(key)) {
        this.sink.stop(handle);
        this.active.delete(key);
      }
    }
    for (const key of wanted) {
      if (!this.active.has(key)) {
        const splitAt = key.lastIndexOf(":");
        const part = key.slice(0, splitAt);
        const pitch = Number(key.slice(splitAt + 1));
        this.active.set(key, this.sink.start(midiToHz(pitch), familyTimbre(part)));
      }
    }
  }

  silence(): void {
    for (const handle of this.active.values()) {
      this.sink.stop(handle);
    }
    this.active.clear();
  }

  voiceCount(): number {
    return this.active.size;
  }
}

interface WebAudioVoice {
  oscillator: OscillatorNode;
  gain: GainNode;
}

/** Adapt a browser AudioContext; voices get a short attack/release ramp. */
export function webAudioSink(context: AudioContext): VoiceSink {
  return {
    start(frequency: number, timbre: Timbre): unknown {
      const oscillator = context.createOscillator();
      const gain = context.createGain();
      oscillator.type = timbre.wave;
      oscillator.frequency.value = frequency;
      gain.gain.setValueAtTime(0, context.currentTime);
      gain.gain.linearRampToValueAtTime(timbre.gain, context.currentTime + 0.02);
      oscillator.connect(gain).connect(context.destination);
      oscillator.start();
      return { oscillator, gain } satisfies WebAudioVoice;
    },
    stop(handle: unknown): void {
      const { oscillator, gain } = handle as WebAudioVoice;
      const now = context.currentTime;
      gain.gain.cancelScheduledValues(now);
      gain.gain.setValueAtTime(gain.gain.value, now);
      gain.gain.linearRampToValueAtTime(0, now + 0.05);
      oscillator.stop(now + 0.06);
    },
  };
}
