"""Standard MIDI File ingestion (formats 0 and 1).

Only the messages needed for score ingestion are interpreted: note-on,
note-off, set-tempo and track-name.  Everything else is skipped with correct
length accounting.  Parse failures report the byte offset where reading broke
down.
"""

from __future__ import annotations

import struct
import warnings

import numpy as np

from .pianoroll import PianoRoll
from .validation import check_positive_int

_HEADER_MAGIC = b"MThd"
_TRACK_MAGIC = b"MTrk"

_META_TRACK_NAME = 0x03
_META_END_OF_TRACK = 0x2F
_META_SET_TEMPO = 0x51

# data byte counts for channel messages, by high nibble
_CHANNEL_DATA_BYTES = {
    0x80: 2,  # note off
    0x90: 2,  # note on
    0xA0: 2,  # polyphonic aftertouch
    0xB0: 2,  # control change
    0xC0: 1,  # program change
    0xD0: 1,  # channel pressure
    0xE0: 2,  # pitch bend
}


class MidiParseError(ValueError):
    """Malformed or truncated MIDI data, with the offending byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class _Cursor:
    def __init__(self, data: bytes, pos: int, end: int):
        self.data = data
        self.pos = pos
        self.end = end

    def remaining(self) -> int:
        return self.end - self.pos

    def read(self, n: int, what: str) -> bytes:
        if self.pos + n > self.end:
            raise MidiParseError(f"truncated while reading {what}", self.pos)
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def read_byte(self, what: str) -> int:
        return self.read(1, what)[0]

    def read_varlen(self, what: str) -> int:
        value = 0
        for _ in range(4):
            b = self.read_byte(what)
            value = (value << 7) | (b & 0x7F)
            if not b & 0x80:
                return value
        raise MidiParseError(f"variable-length {what} exceeds 4 bytes", self.pos)


def _quantize_tick(tick: int, quantization: int, ticks_per_quarter: int) -> int:
    # round(tick * Q / tpq) to nearest, half away from zero, in exact integers
    num = 2 * tick * quantization + ticks_per_quarter
    return num // (2 * ticks_per_quarter)


class _TrackNotes:
    """Note spans collected from one track, painted last-writer-wins."""

    def __init__(self, index: int):
        self.name: str | None = None
        self.index = index
        self.notes: list[tuple[int, int, int, int]] = []  # (on_tick, off_tick, pitch, vel)
        self._active: dict[int, tuple[int, int]] = {}  # pitch -> (on_tick, vel)

    def note_on(self, tick: int, pitch: int, velocity: int) -> None:
        if pitch in self._active:
            warnings.warn(
                f"overlapping note for pitch {pitch} in track {self.label()}; "
                "the later note wins where they overlap"
            )
            self._close(pitch, tick)
        self._active[pitch] = (tick, velocity)

    def note_off(self, tick: int, pitch: int) -> None:
        if pitch in self._active:
            self._close(pitch, tick)

    def _close(self, pitch: int, off_tick: int) -> None:
        on_tick, vel = self._active.pop(pitch)
        self.notes.append((on_tick, off_tick, pitch, vel))

    def finish(self, end_tick: int) -> None:
        for pitch in sorted(self._active):
            self._close(pitch, end_tick)

    def label(self) -> str:
        return self.name if self.name is not None else f"track{self.index}"

    def to_roll(self, quantization: int, ticks_per_quarter: int) -> PianoRoll:
        pitches = sorted({pitch for _, _, pitch, _ in self.notes})
        spans = []
        for on_tick, off_tick, pitch, vel in self.notes:
            a = _quantize_tick(on_tick, quantization, ticks_per_quarter)
            b = _quantize_tick(off_tick, quantization, ticks_per_quarter)
            spans.append((a, b, pitch, vel))
        n_frames = max((b for _, b, _, _ in spans), default=0)
        frames = np.zeros((len(pitches), n_frames), dtype=np.int16)
        row = {p: i for i, p in enumerate(pitches)}
        # stable on_tick order so later notes overwrite earlier ones
        for a, b, pitch, vel in sorted(spans, key=lambda s: s[0]):
            if b > a:
                frames[row[pitch], a:b] = vel
        return PianoRoll(tuple(pitches), frames, quantization, self.label())


def parse_midi(data: bytes, quantization: int) -> list[PianoRoll]:
    """Parse a format 0/1 MIDI file into one piano-roll per track.

    A note-on of velocity v at tick t_on followed by its note-off at t_off
    writes intensity v over frames [round(t_on*Q/tpq), round(t_off*Q/tpq)).
    All rolls are padded with silence to the longest track.
    """
    quantization = check_positive_int(quantization, "quantization")
    if len(data) < 14:
        raise MidiParseError("file too short for a MIDI header", len(data))
    if data[:4] != _HEADER_MAGIC:
        raise MidiParseError("missing MThd header magic", 0)
    header_len = struct.unpack(">I", data[4:8])[0]
    if header_len < 6:
        raise MidiParseError(f"header chunk length {header_len} < 6", 4)
    fmt, n_tracks, division = struct.unpack(">HHH", data[8:14])
    if fmt not in (0, 1):
        raise MidiParseError(f"unsupported MIDI format {fmt}", 8)
    if division & 0x8000:
        raise MidiParseError("SMPTE time division is not supported", 12)
    if division == 0:
        raise MidiParseError("zero ticks per quarter note", 12)

    pos = 8 + header_len
    tracks: list[_TrackNotes] = []
    for i in range(n_tracks):
        if pos + 8 > len(data):
            raise MidiParseError(f"truncated chunk header for track {i}", pos)
        magic = data[pos : pos + 4]
        length = struct.unpack(">I", data[pos + 4 : pos + 8])[0]
        if magic != _TRACK_MAGIC:
            raise MidiParseError(f"expected MTrk chunk, got {magic!r}", pos)
        if pos + 8 + length > len(data):
            raise MidiParseError(f"truncated track {i} (declared {length} bytes)", pos + 8)
        tracks.append(_parse_track(_Cursor(data, pos + 8, pos + 8 + length), i))
        pos += 8 + length

    rolls = [t.to_roll(quantization, division) for t in tracks]
    n_frames = max((r.n_frames for r in rolls), default=0)
    return [r.pad_to(n_frames) for r in rolls]


def _parse_track(cur: _Cursor, index: int) -> _TrackNotes:
    track = _TrackNotes(index)
    tick = 0
    running_status: int | None = None
    while cur.remaining() > 0:
        tick += cur.read_varlen("delta time")
        status = cur.read_byte("status byte")
        if status < 0x80:
            if running_status is None:
                raise MidiParseError("data byte with no running status", cur.pos - 1)
            cur.pos -= 1
            status = running_status
        if status == 0xFF:
            running_status = None
            meta_type = cur.read_byte("meta event type")
            length = cur.read_varlen("meta event length")
            payload = cur.read(length, "meta event payload")
            if meta_type == _META_TRACK_NAME and track.name is None:
                track.name = payload.decode("latin-1").strip() or None
            elif meta_type == _META_END_OF_TRACK:
                break
            # _META_SET_TEMPO carries wall-clock tempo; frame indexing is in
            # score time (ticks), so it does not affect quantization.
        elif status in (0xF0, 0xF7):
            running_status = None
            length = cur.read_varlen("sysex length")
            cur.read(length, "sysex payload")
        elif status >= 0xF0:
            raise MidiParseError(f"unsupported system message 0x{status:02x}", cur.pos - 1)
        else:
            running_status = status
            kind = status & 0xF0
            n_data = _CHANNEL_DATA_BYTES[kind]
            payload = cur.read(n_data, "channel message data")
            if kind == 0x90 and payload[1] > 0:
                track.note_on(tick, payload[0], payload[1])
            elif kind == 0x80 or (kind == 0x90 and payload[1] == 0):
                track.note_off(tick, payload[0])
    track.finish(tick)
    return track
