import { describe, expect, it } from "vitest";
import { midiToHz } from "../src/protocol.js";
import { PolySynth, familyTimbre, type Timbre, type VoiceSink } from "../src/synth.js";

class FakeSink implements VoiceSink {
  started: Array<{ id: number; frequency: number; timbre: Timbre }> = [];
  stopped: number[] = [];
  private nextId = 0;

  start(frequency: number, timbre: Timbre): unknown {
    const id = this.nextId++;
    this.started.push({ id, frequency, timbre });
    return id;
  }

  stop(handle: unknown): void {
    this.stopped.push(handle as number);
  }
}

describe("familyTimbre", () => {
  it("maps instrument families to distinct presets", () => {
    expect(familyTimbre("violin").wave).toBe("sawtooth");
    expect(familyTimbre("cello").wave).toBe("sawtooth");
    expect(familyTimbre("flute").wave).toBe("sine");
    expect(familyTimbre("trumpet").wave).toBe("square");
    expect(familyTimbre("bassoon").wave).toBe("triangle");
    expect(familyTimbre("glass harmonica").wave).toBe("triangle"); // fallback
  });
});

describe("PolySynth", () => {
  it("starts one voice per sounding (part, pitch)", () => {
    const sink = new FakeSink();
    const synth = new PolySynth(sink);
    synth.applyFrame({ violin: [60, 64], flute: [72] });
    expect(synth.voiceCount()).toBe(3);
    const frequencies = sink.started.map((v) => v.frequency).sort((a, b) => a - b);
    expect(frequencies).toEqual([midiToHz(60), midiToHz(64), midiToHz(72)].sort((a, b) => a - b));
  });

  it("diffs between frames: keeps held voices, stops vanished ones", () => {
    const sink = new FakeSink();
    const synth = new PolySynth(sink);
    synth.applyFrame({ violin: [60, 64] });
    synth.applyFrame({ violin: [60, 67] }); // 64 off, 67 on, 60 sustained
    expect(synth.voiceCount()).toBe(2);
    expect(sink.started).toHaveLength(3); // 60, 64, 67 — never restarted 60
    expect(sink.stopped).toHaveLength(1);
  });

  it("the same pitch in two parts is two voices with their own timbres", () => {
    const sink = new FakeSink();
    const synth = new PolySynth(sink);
    synth.applyFrame({ violin: [60], flute: [60] });
    expect(synth.voiceCount()).toBe(2);
    const waves = sink.started.map((v) => v.timbre.wave).sort();
    expect(waves).toEqual(["sawtooth", "sine"]);
  });

  it("an empty frame and silence() stop everything", () => {
    const sink = new FakeSink();
    const synth = new PolySynth(sink);
    synth.applyFrame({ violin: [60, 64] });
    synth.applyFrame({ violin: [] });
    expect(synth.voiceCount()).toBe(0);
    expect(sink.stopped).toHaveLength(2);

    synth.applyFrame({ violin: [62] });
    synth.silence();
    expect(synth.voiceCount()).toBe(0);
    expect(sink.stopped).toHaveLength(3);
  });

  it("handles part names containing separators", () => {
    const sink = new FakeSink();
    const synth = new PolySynth(sink);
    synth.applyFrame({ "violin I: desk 2": [69] });
    expect(sink.started[0]?.frequency).toBeCloseTo(440, 10);
    synth.applyFrame({});
    expect(synth.voiceCount()).toBe(0);
  });
});
