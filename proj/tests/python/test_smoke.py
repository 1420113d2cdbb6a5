import json
import math
import pathlib
import shutil

import pytest

import ics_assist as ics

ROOT = pathlib.Path(__file__).resolve().parents[2]


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("smoke")
    for f in (ROOT / "configs" / "smoke").glob("*.json"):
        shutil.copy(f, d)
    return d


def load(work, name):
    return json.loads((work / name).read_text())


def test_tokenize_and_losses():
    assert ics.tokenize("Where IS my parcel?") == ["where", "is", "my", "parcel"]
    loss = ics.panel_loss([0.5], [1.0], [[0.8]], [1.0])
    assert loss == pytest.approx(2 * math.log(2), abs=1e-12)
    assert ics.panel_loss([0.3, 0.9], [0.0, 1.0], [[0.2, 0.7]], [0.0]) == pytest.approx(
        -(math.log(0.7) + math.log(0.9)) / 2, abs=1e-12
    )
    with pytest.raises(ics.IcsError):
        ics.panel_loss([0.5], [1.0], [[0.8]], [])


def test_classification_report():
    r = ics.classification_report([0.9, 0.2, 0.5, 0.7], [1, 0, 1, 0])
    assert (r["tp"], r["fp"], r["tn"], r["fn"]) == (1, 1, 1, 1)
    assert r["f1"] == pytest.approx(0.5)


def test_pipeline_and_service(work):
    synth = ics.gen_synthetic(load(work, "synthetic.json"), work)
    assert synth["scenarios"] == 12
    prep = ics.prepare_data(load(work, "prepare.json"), work)
    assert prep["negatives"] == prep["augmented_positives"]
    ics.train_embeddings(load(work, "embeddings.json"), work)
    for t in ("teacher-narrow", "teacher-mid", "teacher-wide"):
        report = ics.train_teacher(load(work, f"{t}.json"), work)
        assert report["run"]["phase"] == "teacher"
    distilled = ics.distill(load(work, "distill.json"), work)
    assert distilled["panel"]["lambdas"] == pytest.approx([1 / 3] * 3)
    hybrid = ics.train_hybrid(load(work, "hybrid.json"), work)
    assert hybrid["result"]["student_hash_before"] == hybrid["result"]["student_hash_after_stage1"]
    ev = ics.evaluate(load(work, "evaluate.json"), work)
    assert 0.0 <= ev["report"]["f1"] <= 1.0

    empty_panel = dict(load(work, "distill.json"), teachers=[])
    with pytest.raises(ics.ConfigError):
        ics.distill(empty_panel, work)

    p = ics.predict_student(work / "work/models/student.ckpt", work / "work/text/vocab.json", "where is my parcel",
                            "customer wants to track the parcel")
    assert 0.0 < p < 1.0

    replay = ics.replay_evaluate(load(work, "service.json"), work / "work/data/replay.jsonl", base_dir=work, k=12)
    assert replay["coarse_recall"] == 1.0
    assert replay["scr"] <= replay["coarse_recall"]

    cfg = load(work, "service.json")
    cfg["event_log"] = None
    (work / "service-py.json").write_text(json.dumps(cfg))
    svc = ics.Service(work / "service-py.json")
    sid = svc.open({"order_status": "shipped"})
    rec = svc.recommend(sid, svc.catalog()["scenarios"][0]["description"])
    assert rec["model"] == "hybrid"
    with pytest.raises(ics.ValidationError):
        svc.recommend(sid, "   ")
    with pytest.raises(ics.NotFoundError):
        svc.recommend("sess-missing", "hello")
    if rec["fallback"]:
        svc.feedback(sid, 0, "manual")
    else:
        svc.feedback(sid, 0, "accepted", rec["recommendations"][0]["scenario_id"])
    svc.close(sid, True)
    m = svc.metrics()
    assert m["counts"]["sessions_closed"] == 1
    assert m["ast_seconds"] >= 0.0
