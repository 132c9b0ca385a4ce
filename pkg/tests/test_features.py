"""Feature formulas, baselines, and normalization."""
from __future__ import annotations

import io
import math

import numpy as np
import pytest

from framegen import oracle_features, random_valid_frame
from wakeguard.errors import (
    AlreadyNormalized,
    DegenerateGeometry,
    InsufficientBaseline,
    MalformedFrame,
)
from wakeguard.features import (
    BASELINE_FRAMES,
    STD_EPS,
    BaselineStats,
    FeatureRecord,
    FeatureVector,
    compute_ear,
    compute_features,
    compute_frame_ear,
    compute_frame_puc,
    compute_mar,
    compute_moe,
    compute_puc,
    denormalize,
    fit_baseline,
    identity_baseline,
    normalize,
    read_features,
    record_from_json,
    record_to_json,
    try_compute_features,
    write_features,
)
from wakeguard.landmarks import EyeLandmarks, LandmarkFrame, MouthLandmarks

# Frozen oracle values, evaluated by hand from the definitions before the
# formulas were implemented.
HEX_EYE = np.array([(0, 0), (1, 1), (3, 1), (4, 0), (3, -1), (1, -1)], dtype=float)
HEX_EAR = 0.5
HEX_PUC = 0.846678202356279

MOUTH_CORNERS = ((0.0, 0.0), (3.0, 0.0))
MOUTH_UPPER = np.array([(1.0, 1.0), (1.5, 1.2), (2.0, 1.0)])
MOUTH_LOWER = np.array([(1.0, -1.0), (1.5, -1.2), (2.0, -1.0)])
MOUTH_MAR = 6.4 / 9

REGULAR_HEX = np.array(
    [(math.cos(k * math.pi / 3), math.sin(k * math.pi / 3)) for k in range(6)]
)
REGULAR_HEX_PUC = math.pi ** 2 / 9


def hand_mouth() -> MouthLandmarks:
    return MouthLandmarks(
        a=np.array(MOUTH_CORNERS[0]),
        b=np.array(MOUTH_CORNERS[1]),
        upper=MOUTH_UPPER,
        lower=MOUTH_LOWER,
    )


class TestHandValues:
    def test_hexagon_ear(self):
        assert compute_ear(EyeLandmarks(HEX_EYE)) == pytest.approx(HEX_EAR, abs=1e-12)

    def test_hexagon_puc(self):
        assert compute_puc(EyeLandmarks(HEX_EYE)) == pytest.approx(HEX_PUC, abs=1e-12)

    def test_mouth_mar(self):
        assert compute_mar(hand_mouth()) == pytest.approx(MOUTH_MAR, abs=1e-12)

    def test_regular_hexagon_puc(self):
        got = compute_puc(EyeLandmarks(REGULAR_HEX))
        assert got == pytest.approx(REGULAR_HEX_PUC, abs=1e-9)

    def test_moe_is_mar_over_ear(self):
        assert compute_moe(0.25, 0.8) == pytest.approx(3.2, abs=1e-12)


class TestFormulaProperties:
    def test_matches_independent_oracle(self):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([2])))
        for i in range(200):
            frame = random_valid_frame(rng, i)
            v = compute_features(frame)
            expected = oracle_features(frame)
            got = (v.ear, v.mar, v.puc, v.moe)
            for name, a, b in zip(("ear", "mar", "puc", "moe"), got, expected):
                assert a == pytest.approx(b, rel=1e-9), name

    def test_frame_features_average_both_eyes(self):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([3])))
        frame = random_valid_frame(rng)
        from wakeguard.landmarks import extract_eye_landmarks

        left = extract_eye_landmarks(frame, "left")
        right = extract_eye_landmarks(frame, "right")
        assert compute_frame_ear(frame) == pytest.approx(
            (compute_ear(left) + compute_ear(right)) / 2, abs=1e-15
        )
        assert compute_frame_puc(frame) == pytest.approx(
            (compute_puc(left) + compute_puc(right)) / 2, abs=1e-15
        )

    def test_vector_moe_consistency(self):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([4])))
        v = compute_features(random_valid_frame(rng))
        assert v.moe == pytest.approx(v.mar / v.ear, rel=1e-15)
        assert not v.normalized

    def test_degenerate_eye_width(self):
        pts = HEX_EYE.copy()
        pts[3] = pts[0]  # corners collapse
        with pytest.raises(DegenerateGeometry):
            compute_ear(EyeLandmarks(pts))

    def test_degenerate_mouth_width(self):
        m = hand_mouth()
        degenerate = MouthLandmarks(a=m.a, b=m.a, upper=m.upper, lower=m.lower)
        with pytest.raises(DegenerateGeometry):
            compute_mar(degenerate)

    def test_degenerate_moe(self):
        with pytest.raises(DegenerateGeometry):
            compute_moe(0.0, 1.0)

    def test_try_compute_features(self):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([5])))
        assert try_compute_features(random_valid_frame(rng)) is not None
        faceless = LandmarkFrame(0, 0, False)
        assert try_compute_features(faceless) is None
        nan_pts = np.array(random_valid_frame(rng).points)
        nan_pts[38] = np.nan
        broken = LandmarkFrame(0, 0, True, nan_pts)
        assert try_compute_features(broken) is None


def constant_vectors(n: int, value: float = 0.3) -> list[FeatureVector]:
    return [FeatureVector(value, value, value, value) for _ in range(n)]


def alternating_vectors(n: int) -> list[FeatureVector]:
    return [
        FeatureVector(*([0.2 if i % 2 == 0 else 0.4] * 4)) for i in range(n)
    ]


class TestBaseline:
    def test_alternating_sample_stats(self):
        stats = fit_baseline(alternating_vectors(30), "s0")
        np.testing.assert_allclose(stats.mean, 0.3, atol=1e-12)
        np.testing.assert_allclose(stats.std, 0.1, atol=1e-12)
        assert stats.n_frames == 30

    def test_only_first_30_frames_count(self):
        vecs = alternating_vectors(30) + constant_vectors(10, 99.0)
        stats = fit_baseline(vecs, "s0")
        assert stats.n_frames == BASELINE_FRAMES
        np.testing.assert_allclose(stats.mean, 0.3, atol=1e-12)

    def test_minimum_sample_size(self):
        with pytest.raises(InsufficientBaseline):
            fit_baseline(alternating_vectors(14), "s0")
        assert fit_baseline(alternating_vectors(15), "s0").n_frames == 15

    def test_population_std(self):
        # ddof=0: two points at 0.2/0.4 give std exactly 0.1
        stats = fit_baseline(alternating_vectors(16), "s0")
        assert stats.std[0] == pytest.approx(0.1, abs=1e-15)

    def test_rejects_normalized_sample(self):
        vecs = constant_vectors(20)
        stats = fit_baseline(vecs, "s0")
        norm = [normalize(v, stats) for v in vecs]
        with pytest.raises(AlreadyNormalized):
            fit_baseline(norm, "s0")

    def test_round_trip_dict(self):
        stats = fit_baseline(alternating_vectors(30), "subj")
        again = BaselineStats.from_dict(stats.to_dict())
        assert again.subject_id == "subj"
        np.testing.assert_array_equal(again.mean, stats.mean)
        np.testing.assert_array_equal(again.std, stats.std)
        assert again.n_frames == stats.n_frames

    def test_bad_shape_rejected(self):
        with pytest.raises(ValueError):
            BaselineStats("s", np.zeros(3), np.ones(4), 1)


class TestNormalize:
    def test_z_score_by_hand(self):
        stats = BaselineStats("s", np.array([0.3, 0.4, 0.5, 1.5]),
                              np.array([0.1, 0.2, 0.1, 0.5]), 30)
        z = normalize(FeatureVector(0.4, 0.2, 0.45, 2.0), stats)
        assert z.normalized
        np.testing.assert_allclose(z.as_array(), [1.0, -1.0, -0.5, 1.0], atol=1e-12)

    def test_zero_std_floor_and_flag(self):
        stats = fit_baseline(constant_vectors(30, 0.3), "s0")
        z = normalize(FeatureVector(0.4, 0.3, 0.3, 0.3), stats)
        assert z.zero_std == ("ear", "mar", "puc", "moe")
        assert z.ear == pytest.approx(0.1 / STD_EPS)  # 1e5
        assert z.mar == pytest.approx(0.0, abs=1e-12)

    def test_partial_zero_std_flags(self):
        mean = np.array([0.3, 0.4, 0.5, 1.5])
        std = np.array([0.1, 0.0, 0.1, 0.5])
        stats = BaselineStats("s", mean, std, 30)
        z = normalize(FeatureVector(0.3, 0.4, 0.5, 1.5), stats)
        assert z.zero_std == ("mar",)

    def test_double_normalize_rejected(self):
        stats = identity_baseline()
        z = normalize(FeatureVector(1, 2, 3, 4), stats)
        with pytest.raises(AlreadyNormalized):
            normalize(z, stats)

    def test_denormalize_requires_normalized(self):
        with pytest.raises(AlreadyNormalized):
            denormalize(FeatureVector(1, 2, 3, 4), identity_baseline())

    def test_denormalize_inverts(self):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([6])))
        vecs = [
            FeatureVector(*rng.uniform(0.1, 2.0, size=4)) for _ in range(30)
        ]
        stats = fit_baseline(vecs, "s0")
        for v in vecs:
            back = denormalize(normalize(v, stats), stats)
            np.testing.assert_allclose(back.as_array(), v.as_array(), atol=1e-12)
            assert not back.normalized

    def test_renormalized_baseline_is_standard(self):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([7])))
        vecs = [
            FeatureVector(*rng.uniform(0.1, 2.0, size=4)) for _ in range(30)
        ]
        stats = fit_baseline(vecs, "s0")
        mat = np.stack([normalize(v, stats).as_array() for v in vecs])
        np.testing.assert_allclose(mat.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(mat.std(axis=0), 1.0, atol=1e-9)

    def test_identity_baseline_is_identity(self):
        v = FeatureVector(0.25, 0.5, 0.4, 2.0)
        z = normalize(v, identity_baseline())
        np.testing.assert_allclose(z.as_array(), v.as_array(), atol=1e-15)


class TestRecordIO:
    def records(self) -> list[FeatureRecord]:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([8])))
        out = []
        for i in range(5):
            v = FeatureVector(*rng.uniform(0.1, 2.0, size=4))
            out.append(FeatureRecord(i, i * 40, v))
        return out

    def test_jsonl_round_trip(self):
        recs = self.records()
        buf = io.StringIO()
        assert write_features(recs, buf) == 5
        back = read_features(io.StringIO(buf.getvalue()))
        assert back == recs

    def test_csv_round_trip_preserves_floats(self):
        recs = self.records()
        buf = io.StringIO()
        write_features(recs, buf, fmt="csv")
        back = read_features(io.StringIO(buf.getvalue()), fmt="csv")
        assert back == recs

    def test_csv_header_enforced(self):
        with pytest.raises(MalformedFrame):
            read_features(io.StringIO("a,b,c\n1,2,3\n"), fmt="csv")

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            write_features(self.records(), io.StringIO(), fmt="yaml")

    def test_record_line_shape(self):
        line = record_to_json(self.records()[0])
        assert record_from_json(line) == self.records()[0]
        with pytest.raises(MalformedFrame):
            record_from_json('{"frame":0}')
        with pytest.raises(MalformedFrame):
            record_from_json("nope")

    def test_file_round_trip_with_extension_sniffing(self, tmp_path):
        recs = self.records()
        csv_path = tmp_path / "dump.csv"
        jsonl_path = tmp_path / "dump.jsonl"
        write_features(recs, csv_path, fmt="csv")
        write_features(recs, jsonl_path)
        assert read_features(csv_path) == recs
        assert read_features(jsonl_path) == recs
