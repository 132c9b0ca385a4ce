"""Wire format round-trips, validation, and region extraction."""
from __future__ import annotations

import json

import numpy as np
import pytest

from wakeguard.errors import FaceNotPresent, MalformedFrame
from wakeguard.landmarks import (
    LEFT_EYE,
    MOUTH_A,
    MOUTH_B,
    MOUTH_LOWER,
    MOUTH_UPPER,
    NUM_POINTS,
    RIGHT_EYE,
    LandmarkFrame,
    extract_eye_landmarks,
    extract_mouth_landmarks,
    frame_from_json,
    frame_to_json,
    read_landmarks,
    write_landmarks,
)


def indexed_frame(frame_index: int = 0, t_ms: int = 0) -> LandmarkFrame:
    """Frame whose point i is (i, 2i), so extraction maps are checkable."""
    pts = np.stack([np.arange(NUM_POINTS), 2.0 * np.arange(NUM_POINTS)], axis=1)
    return LandmarkFrame(
        frame_index=frame_index, t_ms=t_ms, face_present=True, points=pts
    )


def faceless_frame(frame_index: int = 0, t_ms: int = 0) -> LandmarkFrame:
    return LandmarkFrame(frame_index=frame_index, t_ms=t_ms, face_present=False)


class TestWireFormat:
    def test_face_frame_round_trip(self):
        frame = indexed_frame(3, 125)
        again = frame_from_json(frame_to_json(frame))
        assert again == frame

    def test_faceless_frame_round_trip(self):
        frame = faceless_frame(9, 375)
        again = frame_from_json(frame_to_json(frame))
        assert again == frame
        assert again.points.shape == (0, 2)

    def test_confidence_round_trip(self):
        pts = indexed_frame().points
        frame = LandmarkFrame(0, 0, True, pts, confidence=0.875)
        again = frame_from_json(frame_to_json(frame))
        assert again.confidence == 0.875
        assert again == frame

    def test_wire_keys_are_compact(self):
        line = frame_to_json(indexed_frame())
        assert " " not in line
        obj = json.loads(line)
        assert set(obj) == {"frame", "t_ms", "face", "points"}

    def test_faceless_line_omits_points(self):
        obj = json.loads(frame_to_json(faceless_frame()))
        assert set(obj) == {"frame", "t_ms", "face"}
        assert obj["face"] is False

    @pytest.mark.parametrize(
        "line",
        [
            "not json",
            "[1,2,3]",
            '{"t_ms":0,"face":false}',
            '{"frame":0,"face":false}',
            '{"frame":0,"t_ms":0}',
            '{"frame":0.5,"t_ms":0,"face":false}',
            '{"frame":true,"t_ms":0,"face":false}',
            '{"frame":0,"t_ms":"0","face":false}',
            '{"frame":0,"t_ms":0,"face":1}',
            '{"frame":0,"t_ms":0,"face":true}',
            '{"frame":0,"t_ms":0,"face":false,"points":[[1,2]]}',
            '{"frame":0,"t_ms":0,"face":true,"points":[[1,2]]}',
            '{"frame":0,"t_ms":0,"face":true,"conf":"high"}',
        ],
    )
    def test_malformed_lines_rejected(self, line):
        with pytest.raises(MalformedFrame):
            frame_from_json(line)

    def test_non_finite_points_rejected(self):
        pts = [[float(i), float(i)] for i in range(NUM_POINTS)]
        pts[40][1] = float("nan")
        line = json.dumps({"frame": 0, "t_ms": 0, "face": True, "points": pts})
        with pytest.raises(MalformedFrame):
            frame_from_json(line)

    def test_file_round_trip(self, tmp_path):
        frames = [indexed_frame(0, 0), faceless_frame(1, 42), indexed_frame(2, 83)]
        path = tmp_path / "session.jsonl"
        assert write_landmarks(frames, path) == 3
        assert list(read_landmarks(path)) == frames

    def test_reader_skips_blank_lines(self, tmp_path):
        path = tmp_path / "gappy.jsonl"
        path.write_text(
            frame_to_json(faceless_frame(0, 0)) + "\n\n"
            + frame_to_json(faceless_frame(1, 40)) + "\n"
        )
        assert len(list(read_landmarks(path))) == 2


class TestLandmarkFrame:
    def test_bad_point_shape_raises(self):
        with pytest.raises(MalformedFrame):
            LandmarkFrame(0, 0, True, points=np.zeros((68, 3)))

    def test_points_are_read_only(self):
        frame = indexed_frame()
        with pytest.raises(ValueError):
            frame.points[0, 0] = 99.0

    def test_equality_covers_points(self):
        a = indexed_frame()
        pts = np.array(a.points)
        pts[10, 0] += 1.0
        b = LandmarkFrame(a.frame_index, a.t_ms, True, pts)
        assert a != b


class TestRegionExtraction:
    def test_eye_index_mapping(self):
        frame = indexed_frame()
        left = extract_eye_landmarks(frame, "left")
        right = extract_eye_landmarks(frame, "right")
        np.testing.assert_array_equal(left.points[:, 0], LEFT_EYE)
        np.testing.assert_array_equal(right.points[:, 0], RIGHT_EYE)
        assert left.p1[0] == 36 and left.p4[0] == 39 and left.p6[0] == 41

    def test_mouth_index_mapping(self):
        mouth = extract_mouth_landmarks(indexed_frame())
        assert mouth.a[0] == MOUTH_A and mouth.b[0] == MOUTH_B
        np.testing.assert_array_equal(mouth.upper[:, 0], MOUTH_UPPER)
        np.testing.assert_array_equal(mouth.lower[:, 0], MOUTH_LOWER)

    def test_vertical_pairs_share_x_on_symmetric_mouth(self):
        # upper[i] and lower[i] must be the opposing lip points of one chord
        assert [61, 62, 63] == list(MOUTH_UPPER)
        assert [67, 66, 65] == list(MOUTH_LOWER)

    def test_faceless_frame_raises(self):
        with pytest.raises(FaceNotPresent):
            extract_eye_landmarks(faceless_frame(), "left")
        with pytest.raises(FaceNotPresent):
            extract_mouth_landmarks(faceless_frame())

    def test_wrong_point_count_raises(self):
        frame = LandmarkFrame(0, 0, True, points=np.zeros((10, 2)))
        with pytest.raises(MalformedFrame):
            extract_eye_landmarks(frame, "left")

    def test_nan_in_region_raises(self):
        pts = np.array(indexed_frame().points)
        pts[37] = np.nan
        frame = LandmarkFrame(0, 0, True, points=pts)
        with pytest.raises(MalformedFrame):
            extract_eye_landmarks(frame, "left")

    def test_nan_outside_region_is_tolerated(self):
        pts = np.array(indexed_frame().points)
        pts[0] = np.nan  # jaw point, not used by any feature region
        frame = LandmarkFrame(0, 0, True, points=pts)
        extract_eye_landmarks(frame, "left")
        extract_mouth_landmarks(frame)

    def test_unknown_side_raises(self):
        with pytest.raises(ValueError):
            extract_eye_landmarks(indexed_frame(), "up")
