import os
from pathlib import Path

import numpy as np
import pytest

import hardening

BENCHMARKS = Path(os.environ.get("HARDENING_BENCHMARK_DIR", Path(__file__).parents[2] / "benchmarks"))


def small_scenario():
    doc = hardening.load(BENCHMARKS / "mixed-boundary-kinematic.json")
    doc.update(n=4, N=20, T=0.1, mu=0.01)
    return doc


def test_benchmarks_validate():
    for path in sorted(BENCHMARKS.glob("*.json")):
        assert hardening.validate(path) == [], path.name


def test_normalize_fills_defaults():
    doc = small_scenario()
    doc.pop("cutoff")
    cfg = hardening.normalize(doc)
    assert cfg["n"] == 4
    assert cfg["probes"]
    assert cfg["c1"] > 0


def test_parse_error_names_field():
    doc = small_scenario()
    doc["n"] = -3
    with pytest.raises(hardening.ParseError, match="^n: "):
        hardening.validate(doc)


def test_violation_codes():
    doc = small_scenario()
    doc["kappa"] = 0.1
    doc["c1"] = 0.25
    codes = [code for code, _ in hardening.validate(doc)]
    assert "kappa" in codes
    with pytest.raises(hardening.ValidationError):
        hardening.run(doc)


def test_small_run_report():
    report = hardening.run(small_scenario())
    assert report["mu"] == pytest.approx(0.01)
    assert report["newton"]["total"] > 0
    assert report["safety"]["pass"]
    assert report["probes"]["tables"]


def test_targets():
    t = hardening.targets(2, "kinematic")
    assert t["stress_normal"] == pytest.approx(0.6)
    assert t["rate_time"] == pytest.approx(0.5)


def test_local_update_elastic_and_plastic():
    zero = np.zeros((2, 2))
    small = np.array([[0.0, 0.01], [0.01, 0.0]])
    out = hardening.local_update(zero, small, dt=0.1)
    assert not out["plastic"]
    np.testing.assert_allclose(out["plastic_strain"], 0.0, atol=1e-15)

    big = np.array([[0.0, 5.0], [5.0, 0.0]])
    out = hardening.local_update(zero, big, dt=0.1, mu=0.01)
    assert out["plastic"]
    assert abs(np.trace(out["plastic_strain"])) < 1e-12
    np.testing.assert_allclose(out["back_stress"], out["plastic_strain"], atol=1e-12)


def test_local_update_rejects_bad_shape():
    with pytest.raises(ValueError):
        hardening.local_update(np.zeros((2, 2)), np.zeros((3, 3)), dt=0.1)


def test_benchmarks_match_schema():
    jsonschema = pytest.importorskip("jsonschema")
    import json

    schema = json.loads((BENCHMARKS.parent / "docs" / "scenario.schema.json").read_text())
    for path in sorted(BENCHMARKS.glob("*.json")):
        jsonschema.validate(hardening.load(path), schema)
