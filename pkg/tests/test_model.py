import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import record_dict
from shotseek.errors import InvalidValue, MissingField
from shotseek.model import (
    TASK_ORDER,
    TOPICS,
    BenchmarkSample,
    ConstraintKind,
    FinalResult,
    Frame,
    FrameGrid,
    LocalizationOutcome,
    RunRecord,
    ShotQuery,
    Verdict,
    VideoAsset,
    frame_time,
    query_from_sample,
)


def test_twenty_topics_and_six_tasks():
    assert len(TOPICS) == 20 and len(set(TOPICS)) == 20
    assert [k.value for k in TASK_ORDER] == ["Shot", "Temporal", "Color", "Style", "Resolution", "Audio"]


def test_constraint_kind_parse_is_case_insensitive():
    assert ConstraintKind.parse("color") is ConstraintKind.COLOR
    with pytest.raises(InvalidValue):
        ConstraintKind.parse("Smell")


def test_shot_query_constraint_text_iff_not_shot():
    ShotQuery("a dog", ConstraintKind.SHOT)
    with pytest.raises(InvalidValue):
        ShotQuery("a dog", ConstraintKind.SHOT, "warm")
    with pytest.raises(InvalidValue):
        ShotQuery("a dog", ConstraintKind.COLOR)
    with pytest.raises(InvalidValue):
        ShotQuery("   ")
    assert ShotQuery("a dog", ConstraintKind.COLOR, "warm").full_text == "a dog warm"


def test_resolution_query_carries_label(sample):
    q = query_from_sample(sample, "Resolution")
    assert "1080P" in q.constraint_text
    assert q.full_text.endswith("(1080P)")


def test_shot_query_has_no_constraint(sample):
    assert query_from_sample(sample, ConstraintKind.SHOT).constraint_text is None


def test_missing_audio_field_raises():
    s = BenchmarkSample.from_dict(record_dict(audio_description_en=None))
    with pytest.raises(MissingField):
        query_from_sample(s, ConstraintKind.AUDIO)


def test_temporal_context_options(sample):
    both = query_from_sample(sample, "Temporal").constraint_text
    assert "chops scallions" in both and "lifts the bowl" in both
    assert "lifts" not in query_from_sample(sample, "Temporal", temporal_context="before").constraint_text
    assert "chops" not in query_from_sample(sample, "Temporal", temporal_context="after").constraint_text


def test_chinese_fields(sample):
    q = query_from_sample(sample, "Color", language="ch")
    assert q.description.startswith("汤") and q.constraint_text == "暖色调。"


def test_sample_invariants():
    with pytest.raises(InvalidValue):
        BenchmarkSample.from_dict(record_dict(category="Cooking"))
    with pytest.raises(InvalidValue):
        BenchmarkSample.from_dict(record_dict(resolution="4K"))
    with pytest.raises(InvalidValue):
        BenchmarkSample.from_dict(record_dict(context_description_en=["a", "b", "c"]))


def test_sample_round_trip(sample):
    assert BenchmarkSample.from_dict(sample.to_dict()) == sample


@given(st.integers(1, 500), st.floats(0.1, 1e5, allow_nan=False), st.data())
def test_frame_time_is_bin_midpoint(n, d, data):
    i = data.draw(st.integers(0, n - 1))
    t = frame_time(i, n, d)
    lo, hi = i * d / n, (i + 1) * d / n
    assert lo < t < hi
    assert math.isclose(t - lo, hi - t, rel_tol=1e-9, abs_tol=1e-9)


def _video(d=10.0):
    return VideoAsset("https://x.org/v", "/tmp/v.mp4", d, 64, 36, True)


def test_frame_grid_checks_timestamp_law():
    v = _video()
    frames = tuple(Frame(i, frame_time(i, 4, 10.0), f"f{i}.jpg") for i in range(4))
    grid = FrameGrid(v, 4, frames)
    assert grid.timestamps == [1.25, 3.75, 6.25, 8.75]
    bad = frames[:3] + (Frame(3, 9.0, "f3.jpg"),)
    with pytest.raises(InvalidValue):
        FrameGrid(v, 4, bad)


def test_outcome_timestamp_must_match_index():
    v = _video()
    LocalizationOutcome(v, 1, 4, 3.75, "raw")
    with pytest.raises(InvalidValue):
        LocalizationOutcome(v, 1, 4, 3.0, "raw")
    with pytest.raises(InvalidValue):
        LocalizationOutcome(v, 4, 4, 11.25, "raw")
    assert not LocalizationOutcome(v, None, 4, None, "N/A").matched


def test_run_record_round_trip_and_counts():
    v = _video()
    o = LocalizationOutcome(v, 0, 4, 1.25, "raw", "f0.jpg")
    rec = RunRecord(
        "s1", ConstraintKind.SHOT, ("q",), (v,), (o,), (Verdict(True, "judge"),),
        FinalResult(True, v.url, 0), "fp", stage_timings={"expand": 0.5},
    )  # fmt: skip
    back = RunRecord.from_dict(rec.to_dict())
    assert back == rec
    assert "stage_timings" not in rec.to_dict(include_timings=False)
    with pytest.raises(InvalidValue):
        RunRecord("s1", ConstraintKind.SHOT, (), (), (o,), (), FinalResult(False), "fp")


def test_final_result_consistency():
    with pytest.raises(InvalidValue):
        FinalResult(True)
    with pytest.raises(InvalidValue):
        FinalResult(False, "u", 1)
