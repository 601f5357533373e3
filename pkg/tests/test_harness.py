import json

import pytest

from conftest import read_json, record_dict, solid_jpeg
from shotseek.backends import Backends
from shotseek.backends.mock import LocalFetcher, ScriptedChat, StaticSearch
from shotseek.cli import main
from shotseek.config import PipelineConfig
from shotseek.errors import EmptyTask, InvalidValue
from shotseek.generator import render_agent_output
from shotseek.model import BenchmarkSample, ConstraintKind, FinalResult, RunRecord
from shotseek.pipeline import NO_FRAME, run_sample
from shotseek.retriever import VideoCache
from shotseek.sampler import SamplingPolicy
from shotseek.scoring import average, grid_presets, score


# -- pipeline --------------------------------------------------------------------


def _router(judge_answers, frame='<tool_call>{"frame_id": 1}</tool_call>', generator=None):
    answers = iter(judge_answers)

    def reply(req):
        if "search_videos" in req.text:
            return generator or render_agent_output("t", ["q1", "q2"])
        if "Grounding" in req.text:
            return frame
        return next(answers)

    return ScriptedChat(reply)


@pytest.fixture
def setup(tmp_path, clip10, media):
    gt = solid_jpeg(tmp_path / "gt.jpg", (10, 200, 10))
    sample = BenchmarkSample.from_dict(record_dict(asset_paths={"target_frame": str(gt)}))
    urls = [f"https://v.test/{k}" for k in "abcd"]
    search = StaticSearch({"q1": urls[:2], "q2": urls[2:]})
    fetcher = LocalFetcher({u: clip10.local_path for u in urls})
    cfg = PipelineConfig(policy=SamplingPolicy(flat=4))

    def make(chat):
        return Backends(chat, None, search, fetcher, media)

    return sample, cfg, make, VideoCache(tmp_path / "cache"), urls


def test_early_stop_on_second_candidate(setup):
    sample, cfg, make, cache, urls = setup
    chat = _router(["FALSE\nno", "TRUE\nyes", "TRUE"])
    rec = run_sample(sample, "Shot", cfg, make(chat), cache)
    assert rec.final.success and rec.final.winning_candidate == urls[1] and rec.final.winning_frame == 1
    assert len(rec.candidates) == 4 and len(rec.outcomes) == 2 and len(rec.verdicts) == 2
    assert set(rec.stage_timings) == {"expand", "retrieve", "localize", "judge"}


def test_all_candidates_rejected(setup):
    sample, cfg, make, cache, _ = setup
    rec = run_sample(sample, "Color", cfg, make(_router(["FALSE"] * 4)), cache)
    assert not rec.final.success and len(rec.verdicts) == 4
    assert rec.task is ConstraintKind.COLOR


def test_no_match_gets_synthetic_verdict(setup):
    sample, cfg, make, cache, _ = setup
    cfg = cfg.with_(parse_mode="permissive")
    chat = _router([], frame='<tool_call>{"frame_id": "N/A"}</tool_call>')
    rec = run_sample(sample, "Shot", cfg, make(chat), cache)
    assert len(rec.verdicts) == 4 and all(v.rationale == NO_FRAME for v in rec.verdicts)
    assert not any("evaluator" in c.text for c in chat.calls)


def test_generator_failure_short_circuits(setup):
    sample, cfg, make, cache, _ = setup
    rec = run_sample(sample, "Shot", cfg, make(_router([], generator="no tool call here")), cache)
    assert not rec.final.success and rec.candidates == () and rec.final.reason.startswith("generator")


def test_judge_error_is_a_false_verdict(setup):
    sample, cfg, make, cache, _ = setup
    rec = run_sample(sample, "Shot", cfg, make(_router(["what?"] * 3 + ["TRUE"])), cache)
    assert not rec.verdicts[0].matched and "judge failed" in rec.verdicts[0].rationale
    assert rec.final.success and len(rec.verdicts) == 2


def test_missing_ground_truth(setup, tmp_path):
    _, cfg, make, cache, _ = setup
    s = BenchmarkSample.from_dict(record_dict(asset_paths={"target_frame": str(tmp_path / "none.jpg")}))
    with pytest.raises(InvalidValue):
        run_sample(s, "Shot", cfg, make(_router([])), cache)


# -- scoring ---------------------------------------------------------------------


def _rec(sid, task, ok):
    final = FinalResult(True, "u", 0) if ok else FinalResult(False)
    from shotseek.model import LocalizationOutcome, Verdict, VideoAsset

    if not ok:
        return RunRecord(sid, ConstraintKind.parse(task), (), (), (), (), final, "fp")
    v = VideoAsset("u", "/x.mp4", 10.0, 1, 1, True)
    o = LocalizationOutcome(v, 0, 4, 1.25, "")
    return RunRecord(sid, ConstraintKind.parse(task), ("q",), (v,), (o,), (Verdict(True, "j"),), final, "fp")


def test_score_counts_and_average():
    recs = [_rec("a", "Shot", True), _rec("b", "Shot", False), _rec("c", "Color", True), _rec("d", "Color", True)]
    rep = score(recs)
    assert rep.per_task == {ConstraintKind.SHOT: 50.0, ConstraintKind.COLOR: 100.0}
    assert rep.average == 75.0 and rep.config_fingerprint == "fp"
    assert score(recs).to_json() == rep.to_json()


def test_score_task_override_and_expected():
    recs = [_rec("a", "Shot", True)]
    assert ConstraintKind.AUDIO in score(recs, {"a": "Audio"}).per_task
    with pytest.raises(EmptyTask):
        score(recs, expected=["Shot", "Audio"])
    with pytest.raises(EmptyTask):
        score([])


def test_all_success():
    recs = [_rec(str(i), t, True) for i, t in enumerate(["Shot", "Temporal", "Color", "Style", "Resolution", "Audio"])]
    rep = score(recs)
    assert set(rep.per_task.values()) == {100.0} and rep.average == 100.0


def test_average_skips_missing():
    assert average({"a": 10.0, "b": None, "c": 20.0}) == 15.0
    with pytest.raises(EmptyTask):
        average({})


# -- config ----------------------------------------------------------------------


def test_config_defaults_and_presets():
    c = PipelineConfig()
    assert (c.m, c.n, c.policy.notation, c.clip_eval) == (2, 2, "64-128-192", 0.7)
    assert PipelineConfig.open_source().policy.flat == 64
    with pytest.raises(InvalidValue):
        PipelineConfig(m=0)


def test_config_json_round_trip(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"m": 3, "policy": "32-64-96", "models": {"judge": "big"}}))
    c = PipelineConfig.load(p)
    assert c.m == 3 and c.policy.notation == "32-64-96" and c.models["judge"] == "big" and c.models["generator"]
    assert PipelineConfig.from_dict(c.to_dict()) == c
    with pytest.raises(InvalidValue):
        PipelineConfig.from_dict({"typo": 1})


def test_fingerprint_ignores_locations():
    a = PipelineConfig()
    assert a.fingerprint() == a.with_(cache_dir="/elsewhere", workers=9).fingerprint()
    assert a.fingerprint() != a.with_(m=3).fingerprint()


def test_grid_presets():
    base = PipelineConfig()
    assert [(c.m, c.n) for c in grid_presets(base, "queries")] == [(1, 2), (2, 2), (3, 2)]
    assert [(c.m, c.n) for c in grid_presets(base, "urls")] == [(2, 1), (2, 2), (2, 3)]
    assert [c.policy.notation for c in grid_presets(base, "32-64-96,64-128-192")] == ["32-64-96", "64-128-192"]


# -- cli -------------------------------------------------------------------------


def test_cli_quotas(capsys):
    assert main(["bench", "quotas"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["total"] == 1210


def test_cli_validate_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(record_dict(), ensure_ascii=False))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(record_dict(context_description_en=["a"])))
    assert main(["bench", "validate", str(good)]) == 0
    assert main(["bench", "validate", str(good), str(bad)]) == 1


def test_cli_usage_errors(tmp_path, capsys):
    assert main([]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["--config", str(tmp_path / "missing.json"), "bench", "quotas"]) == 2
    assert main(["bench", "quotas", "Smell"]) == 2


def test_cli_expand_replay_missing_is_failure(tmp_path, capsys):
    assert main(["--replay", str(tmp_path / "j"), "expand", "--description", "a cat"]) == 1


def test_cli_sample(clip10, capsys, tmp_path):
    import shutil

    v = tmp_path / "video.mp4"
    shutil.copy(clip10.local_path, v)
    assert main(["sample", str(v), "--frames", "3"]) == 0
    grid = json.loads(capsys.readouterr().out)
    assert grid["num_frames"] == 3


def test_cli_run_score_ablate(minibench_root, tmp_path, capsys, no_network):
    work = tmp_path
    cfg = str(minibench_root / "config.json")
    samples = str(minibench_root / "samples.json")
    assert main(["--workdir", str(work), "--config", cfg, "run", samples, "--run-id", "live"]) == 0
    rep = read_json(work / "runs/live/report.json")
    assert len(rep["per_sample"]) == 10
    assert len(list((work / "runs/live/samples").glob("*/trace.json"))) == 10
    capsys.readouterr()
    assert main(["score", str(work / "runs/live")]) == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown["Avg"] == round(rep["average"], 1)
    assert main(["--workdir", str(work), "--config", cfg, "ablate", samples, "--grid", "urls", "--run-id", "ab"]) == 0
    rows = read_json(work / "runs/ab/ablation.json")
    assert [r["config"].split()[0] for r in rows] == ["M2xN1", "M2xN2", "M2xN3"]
    assert no_network == []
