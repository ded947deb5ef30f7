import json

import numpy as np
import pytest

from sigverify.errors import (CorruptModelError, KnowledgebaseError, KnowledgebaseNotFoundError,
                              VersionError)
from sigverify.knowledgebase import (Knowledgebase, load_knowledgebase, save_knowledgebase,
                                     timestamp)
from sigverify.symbolic_model import ModelStore, ReferenceInterval, UserModel


def one_user_kb():
    rng = np.random.default_rng(0)
    refs = [ReferenceInterval(lo, lo + rng.random(3), cid, 4)
            for cid, lo in enumerate([rng.standard_normal(3) / 7, rng.standard_normal(3) / 3])]
    model = UserModel("u01", [4, 0, 2], rng.standard_normal(6) * 1e5, rng.random(6) + 0.1,
                      2.0, refs, 0.55)
    return Knowledgebase(ModelStore.of([model]), timestamp(True), {"d": 3})


def test_content(tmp_path):
    save_knowledgebase(one_user_kb(), tmp_path / "kb.json")
    doc = json.loads((tmp_path / "kb.json").read_text())
    assert doc["version"] == "1"
    (m,) = doc["models"]
    assert m["user_id"] == "u01"
    assert m["selected_indices"] == [4, 0, 2]
    assert all(len(r["intervals"]) == 3 for r in m["references"])
    assert set(m["normalization"]) == {"mean", "scale"}


def test_round_trip_bitwise(tmp_path):
    kb = one_user_kb()
    save_knowledgebase(kb, tmp_path / "a.json")
    back = load_knowledgebase(tmp_path / "a.json")
    a, b = kb.models["u01"], back.models["u01"]
    for field in ("selected_indices", "mean", "scale"):
        assert np.array_equal(getattr(a, field), getattr(b, field))
    for ra, rb in zip(a.references, b.references):
        assert np.array_equal(ra.lower, rb.lower) and np.array_equal(ra.upper, rb.upper)
        assert (ra.cluster_id, ra.member_count) == (rb.cluster_id, rb.member_count)
    assert (a.alpha, a.tau) == (b.alpha, b.tau)
    save_knowledgebase(back, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_inverted_interval_is_corrupt(tmp_path):
    save_knowledgebase(one_user_kb(), tmp_path / "kb.json")
    doc = json.loads((tmp_path / "kb.json").read_text())
    doc["models"][0]["references"][0]["intervals"][1] = [2.0, 1.0]
    (tmp_path / "kb.json").write_text(json.dumps(doc))
    with pytest.raises(CorruptModelError):
        load_knowledgebase(tmp_path / "kb.json")


@pytest.mark.parametrize("edit", [
    lambda m: m.update(selected_indices=[4, 0]),
    lambda m: m.update(selected_indices=[4, 4, 2]),
    lambda m: m.update(selected_indices=[4, 0, 99]),
    lambda m: m["normalization"].update(scale=[0.0] * 6),
    lambda m: m.update(tau=1.5),
    lambda m: m.update(references=[]),
    lambda m: m.pop("alpha"),
])
def test_invariant_gate(tmp_path, edit):
    save_knowledgebase(one_user_kb(), tmp_path / "kb.json")
    doc = json.loads((tmp_path / "kb.json").read_text())
    edit(doc["models"][0])
    (tmp_path / "kb.json").write_text(json.dumps(doc))
    with pytest.raises(CorruptModelError):
        load_knowledgebase(tmp_path / "kb.json")


def test_duplicate_user(tmp_path):
    save_knowledgebase(one_user_kb(), tmp_path / "kb.json")
    doc = json.loads((tmp_path / "kb.json").read_text())
    doc["models"].append(doc["models"][0])
    (tmp_path / "kb.json").write_text(json.dumps(doc))
    with pytest.raises(CorruptModelError, match="duplicate"):
        load_knowledgebase(tmp_path / "kb.json")


def test_version_mismatch(tmp_path):
    save_knowledgebase(one_user_kb(), tmp_path / "kb.json")
    doc = json.loads((tmp_path / "kb.json").read_text())
    doc["version"] = "2"
    (tmp_path / "kb.json").write_text(json.dumps(doc))
    with pytest.raises(VersionError):
        load_knowledgebase(tmp_path / "kb.json")


def test_missing_file(tmp_path):
    with pytest.raises(KnowledgebaseNotFoundError):
        load_knowledgebase(tmp_path / "nope.json")


def test_unwritable(tmp_path):
    with pytest.raises(KnowledgebaseError, match="missing"):
        save_knowledgebase(one_user_kb(), tmp_path / "missing" / "kb.json")


def test_not_json(tmp_path):
    (tmp_path / "kb.json").write_text("{")
    with pytest.raises(CorruptModelError):
        load_knowledgebase(tmp_path / "kb.json")


def test_fixed_time():
    assert timestamp(True) == "1970-01-01T00:00:00Z"
    assert timestamp(False).endswith("Z")
