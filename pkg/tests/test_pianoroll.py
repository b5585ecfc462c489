import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tutti.pianoroll import (
    PIANO_DIM,
    OrchestraLayout,
    PianoRoll,
    StateSequence,
    align_pair,
    build_layout,
    extract_events,
    load_parts,
    orchestra_states,
    parts_from_json,
    parts_to_json,
    piano_states,
    save_parts,
    sequence_to_parts,
    split_pair,
)


def roll(pitches, frames, q=8, label="x"):
    return PianoRoll(tuple(pitches), np.array(frames, dtype=np.int16), q, label)


class TestPianoRoll:
    def test_rejects_mismatched_rows(self):
        with pytest.raises(ValueError, match="rows"):
            roll([60, 62], [[0, 1, 0]])

    def test_rejects_unsorted_pitches(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            roll([62, 60], [[1], [1]])

    def test_rejects_out_of_range_intensity(self):
        with pytest.raises(ValueError, match="0..127"):
            roll([60], [[128]])

    def test_active_pitches_skips_silent_rows(self):
        r = roll([60, 64, 67], [[0, 0], [0, 3], [0, 0]])
        assert r.active_pitches() == (64,)

    def test_pad_to_appends_silence(self):
        r = roll([60], [[5, 6]]).pad_to(4)
        assert r.n_frames == 4
        assert r.frames.tolist() == [[5, 6, 0, 0]]

    def test_requantize_up_repeats_frames(self):
        r = roll([60], [[5, 0]], q=4).requantize(8)
        assert r.quantization == 8
        assert r.frames.tolist() == [[5, 5, 0, 0]]

    def test_requantize_down_strides_frames(self):
        r = roll([60], [[5, 1, 7, 2]], q=8).requantize(4)
        assert r.frames.tolist() == [[5, 7]]

    def test_requantize_round_trip_up_down_is_identity(self):
        r = roll([60, 72], [[5, 0, 3], [0, 2, 2]], q=4)
        again = r.requantize(12).requantize(4)
        assert again.frames.tolist() == r.frames.tolist()

    def test_requantize_rejects_non_integer_ratio(self):
        with pytest.raises(ValueError, match="integer factor"):
            roll([60], [[1, 1, 1]], q=6).requantize(4)


class TestLayout:
    def test_round_trips_through_dict(self):
        layout = OrchestraLayout((("violin", (60, 64)), ("cello", (36,))))
        assert OrchestraLayout.from_dict(layout.to_dict()) == layout

    def test_rejects_duplicate_parts(self):
        with pytest.raises(ValueError, match="duplicate"):
            OrchestraLayout((("violin", (60,)), ("violin", (62,))))

    def test_vector_parts_inverse(self):
        layout = OrchestraLayout((("violin", (60, 64, 67)), ("cello", (36, 40))))
        state = np.array([1, 0, 1, 0, 1], dtype=np.uint8)
        active = layout.vector_to_parts(state)
        assert active == {"violin": [60, 67], "cello": [40]}
        assert layout.parts_to_vector(active).tolist() == state.tolist()

    @given(st.lists(st.booleans(), min_size=5, max_size=5))
    def test_vector_round_trip_any_state(self, bits):
        layout = OrchestraLayout((("violin", (60, 64, 67)), ("cello", (36, 40))))
        state = np.array(bits, dtype=np.uint8)
        assert layout.parts_to_vector(layout.vector_to_parts(state)).tolist() == state.tolist()

    def test_build_layout_keeps_only_played_pitches(self):
        corpus = [[roll([60, 64], [[1, 0], [0, 0]], label="violin")]]
        layout = build_layout(corpus)
        assert layout.parts == (("violin", (60,)),)

    def test_build_layout_first_appearance_order(self):
        corpus = [
            [roll([60], [[1]], label="violin"), roll([36], [[1]], label="cello")],
            [roll([50], [[1]], label="viola")],
        ]
        assert build_layout(corpus).part_names == ("violin", "cello", "viola")

    def test_build_layout_explicit_order_wins(self):
        corpus = [[roll([60], [[1]], label="violin"), roll([36], [[1]], label="cello")]]
        layout = build_layout(corpus, part_order=["cello", "violin"])
        assert layout.part_names == ("cello", "violin")

    def test_build_layout_warns_on_silent_part(self):
        corpus = [[roll([60], [[0]], label="violin")]]
        with pytest.warns(UserWarning, match="never played"):
            layout = build_layout(corpus)
        assert layout.parts == (("violin", ()),)


class TestStates:
    def test_piano_states_maps_a0_to_bit_zero(self):
        states = piano_states(roll([21], [[99]], label="piano"))
        assert states.shape == (1, PIANO_DIM)
        assert states[0, 0] == 1 and states[0].sum() == 1

    def test_piano_states_clips_out_of_range_with_warning(self):
        with pytest.warns(UserWarning, match="clipped"):
            states = piano_states(roll([15, 60], [[1, 1], [0, 5]], label="piano"))
        assert states[:, :].sum() == 1  # only the in-range note-on survives

    def test_orchestra_states_respects_layout_order(self):
        layout = OrchestraLayout((("violin", (60, 64)), ("cello", (36,))))
        states = orchestra_states(
            [roll([36], [[7]], label="cello"), roll([64], [[3]], label="violin")], layout
        )
        assert states.tolist() == [[0, 1, 1]]

    def test_orchestra_states_missing_part_is_silent(self):
        layout = OrchestraLayout((("violin", (60,)), ("cello", (36,))))
        states = orchestra_states([roll([60], [[1]], label="violin")], layout)
        assert states.tolist() == [[1, 0]]

    def test_align_pair_pads_shorter_side(self):
        layout = OrchestraLayout((("violin", (60,)),))
        piano = roll([60], [[1, 1, 1, 1]], label="piano")
        orch = [roll([60], [[1]], label="violin")]
        p_seq, o_seq = align_pair(piano, orch, layout)
        assert len(p_seq) == len(o_seq) == 4
        assert o_seq.states[:, 0].tolist() == [1, 0, 0, 0]

    def test_align_pair_rejects_quantization_mismatch(self):
        layout = OrchestraLayout((("violin", (60,)),))
        with pytest.raises(ValueError, match="mismatch"):
            align_pair(
                roll([60], [[1]], q=8, label="piano"),
                [roll([60], [[1]], q=4, label="violin")],
                layout,
            )

    def test_state_sequence_rejects_non_binary(self):
        with pytest.raises(ValueError, match="binary"):
            StateSequence(np.array([[2]]), 8)

    def test_up_then_downsample_is_identity(self):
        seq = StateSequence(np.array([[1, 0], [0, 1], [1, 1]], dtype=np.uint8), 4)
        again = seq.upsample(3).downsample(3)
        assert again.quantization == 4
        assert again.states.tolist() == seq.states.tolist()


class TestEvents:
    def test_extracts_changes_only(self):
        seq = StateSequence(
            np.array([[1, 0], [1, 0], [0, 1], [0, 1], [1, 1]], dtype=np.uint8), 8
        )
        ev = extract_events(seq)
        assert ev.times.tolist() == [0, 2, 4]

    def test_first_frame_optional(self):
        seq = StateSequence(np.array([[1], [1], [0]], dtype=np.uint8), 8)
        assert extract_events(seq, include_first=False).times.tolist() == [2]

    def test_constant_sequence_has_single_event(self):
        seq = StateSequence(np.ones((5, 2), dtype=np.uint8), 8)
        assert extract_events(seq).times.tolist() == [0]


class TestJsonFormat:
    def test_round_trip(self, tmp_path):
        parts = [
            roll([60, 64], [[1, 0], [0, 127]], label="piano"),
            roll([36], [[55, 0]], label="cello"),
        ]
        path = tmp_path / "pair.json"
        save_parts(parts, path)
        loaded = load_parts(path)
        assert [p.label for p in loaded] == ["piano", "cello"]
        assert loaded[0].frames.tolist() == parts[0].frames.tolist()
        assert loaded[0].quantization == 8

    def test_document_shape(self):
        doc = parts_to_json([roll([60], [[9]], label="piano")])
        assert doc["quantization"] == 8
        assert doc["parts"][0]["name"] == "piano"
        assert doc["parts"][0]["pitches"] == [60]
        assert doc["parts"][0]["frames"] == [[9]]

    def test_rejects_quantization_disagreement(self):
        doc = parts_to_json([roll([60], [[9]], q=8)])
        doc["parts"].append(parts_to_json([roll([62], [[9]], q=8)])["parts"][0])
        doc["quantization"] = 8
        loaded = parts_from_json(doc)
        assert len(loaded) == 2  # same Q everywhere: fine

    def test_rejects_malformed_document(self):
        with pytest.raises((ValueError, KeyError)):
            parts_from_json({"quantization": 8})

    def test_split_pair_requires_exactly_one_piano(self):
        with pytest.raises(ValueError, match="piano"):
            split_pair([roll([60], [[1]], label="violin")])
        with pytest.raises(ValueError, match="piano"):
            split_pair(
                [roll([60], [[1]], label="piano"), roll([62], [[1]], label="piano")]
            )

    def test_sequence_to_parts_inverts_orchestra_states(self):
        layout = OrchestraLayout((("violin", (60, 64)), ("cello", (36,))))
        states = np.array([[1, 0, 1], [0, 1, 0]], dtype=np.uint8)
        seq = StateSequence(states, 8, layout)
        parts = sequence_to_parts(seq)
        assert orchestra_states(parts, layout).tolist() == states.tolist()
