import json
from pathlib import Path

import numpy as np
import pytest

from ewfs.empirical import canonical_hardy, model_from_bell, model_to_json
from ewfs.io import (
    FormatError, Report, basis_from_json, basis_from_name, basis_to_json, bell_from_json, bell_to_json,
    digest, dumps, load_file, model_file_json, protocol_from_json, protocol_to_json,
)
from ewfs.qsim import X_BASIS, Z_BASIS
from ewfs.scenario import (
    CANONICAL_BELL, GHZ_CONTEXTS, HARDY_CONTEXTS, Ask, fr_protocol, ghz_fr_protocol, joint_distribution,
    lift_basis, ok_fail_basis,
)

DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.mark.parametrize("name", ["Z", "X", "Y", "Xswap", "R(0.3)"])
def test_basis_names(name):
    b = basis_from_name(name)
    assert basis_to_json(b) == name
    assert np.array_equal(basis_from_json(name).vectors, b.vectors)


def test_lift_name_round_trip():
    b = lift_basis(Z_BASIS, X_BASIS)
    back = basis_from_json(basis_to_json(b))
    assert np.array_equal(back.vectors, b.vectors) and back.labels == b.labels


def test_explicit_basis_vectors():
    b = basis_from_json({"labels": [0, 1], "vectors": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]})
    assert np.array_equal(b.vectors, np.array([[0, 1], [1, 0]], dtype=complex))


@pytest.mark.parametrize("bad", ["Q", "R(x)", {"labels": [0]}, {"vectors": [[1, 1], [1, 1]]}])
def test_bad_basis(bad):
    with pytest.raises(FormatError):
        basis_from_json(bad)


@pytest.mark.parametrize("make,contexts", [(fr_protocol, HARDY_CONTEXTS), (ghz_fr_protocol, GHZ_CONTEXTS)])
def test_protocol_round_trip(make, contexts):
    p = make()
    doc = protocol_to_json(p, contexts)
    back, ctxs = protocol_from_json(json.loads(json.dumps(doc)))
    assert protocol_to_json(back, ctxs) == doc
    for c in contexts:
        d1, d2 = joint_distribution(p, c), joint_distribution(back, c)
        assert max(abs(d1[k] - d2[k]) for k in d1) == 0


def test_protocol_with_ask_round_trip():
    p = fr_protocol()
    q = p.with_steps(p.steps[:2] + (Ask("Ursula", "L_B"),) + p.steps[2:])
    back, _ = protocol_from_json(protocol_to_json(q))
    assert back.steps == q.steps


@pytest.mark.parametrize("name", sorted(CANONICAL_BELL))
def test_bell_round_trip(name):
    bell = CANONICAL_BELL[name]()
    doc = bell_to_json(bell)
    back = bell_from_json(json.loads(json.dumps(doc)))
    assert bell_to_json(back) == doc
    assert model_to_json(model_from_bell(back)) == model_to_json(model_from_bell(bell))


@pytest.mark.parametrize("path", sorted(DATA.glob("*.json")), ids=lambda p: p.name)
def test_shipped_files_load(path):
    fmt, obj = load_file(path)
    assert fmt in ("ewfs-protocol", "ewfs-bell", "ewfs-model")


def test_shipped_files_match_builders():
    assert json.loads((DATA / "fr_protocol.json").read_text()) == protocol_to_json(fr_protocol(), HARDY_CONTEXTS)
    assert json.loads((DATA / "hardy_bell.json").read_text()) == bell_to_json(CANONICAL_BELL["hardy"]())


def test_format_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(FormatError):
        load_file(bad)
    with pytest.raises(FormatError):
        load_file(tmp_path / "missing.json")
    other = tmp_path / "other.json"
    other.write_text(json.dumps({"format": "something"}))
    with pytest.raises(FormatError):
        load_file(other)
    doc = protocol_to_json(fr_protocol())
    doc["version"] = 99
    with pytest.raises(FormatError):
        protocol_from_json(doc)
    doc = protocol_to_json(fr_protocol())
    del doc["steps"][0]["lab"]
    with pytest.raises(FormatError):
        protocol_from_json(doc)


def test_protocol_file_rejects_bad_structure():
    doc = protocol_to_json(fr_protocol())
    doc["steps"] = doc["steps"][2:]  # supermeasurements without friends
    with pytest.raises(FormatError):
        protocol_from_json(doc)


def test_model_file_round_trip(tmp_path):
    f = tmp_path / "m.json"
    f.write_text(dumps(model_file_json(canonical_hardy())))
    fmt, m = load_file(f)
    assert fmt == "ewfs-model" and m == canonical_hardy()


def test_dumps_and_digest_canonical():
    assert dumps({"b": 1, "a": [1, 2]}) == dumps({"a": [1, 2], "b": 1})
    assert dumps({}).endswith("\n")
    assert digest({"x": 1, "y": 2}) == digest({"y": 2, "x": 1})


def test_report_round_trip():
    r = Report(("nogo", "truth"), "abc", {"verdict": "UNSAT"}, "0.1.0")
    assert Report.from_json(json.loads(dumps(r.to_json()))) == r
    with pytest.raises(FormatError):
        Report.from_json({"format": "ewfs-model"})


def test_ok_fail_basis_stays_named():
    assert basis_to_json(ok_fail_basis()) == "lift(Z,Xswap)"
