"""Smoke test for the geoball_py extension.

Builds the extension with cargo unless GEOBALL_PY_LIB points at an existing
shared library, then exercises models, metrics, verification and
symmetrization. Runs under pytest or as a plain script.
"""

import importlib.util
import json
import math
import os
import pathlib
import shutil
import subprocess
import sys
import tempfile

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[1]
SCHEMA = ROOT / "crates" / "cli" / "schema" / "report.schema.json"


def load_extension():
    lib = os.environ.get("GEOBALL_PY_LIB")
    if lib is None:
        subprocess.run(
            ["cargo", "build", "-p", "geoball-py", "--release", "--features", "extension-module"],
            cwd=ROOT,
            check=True,
        )
        lib = ROOT / "target" / "release" / "libgeoball_py.so"
    target = pathlib.Path(tempfile.mkdtemp()) / "geoball_py.so"
    shutil.copy(lib, target)
    spec = importlib.util.spec_from_file_location("geoball_py", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


gb = load_extension()


def test_euclidean_disk_closed_forms():
    m = gb.Model("euclidean")
    assert m.dim == 2 and m.label == "euclidean"
    assert math.isclose(m.isoperimetric_quotient(1.0), 0.5, rel_tol=1e-12)
    assert math.isclose(m.ball_volume(1.0), math.pi, rel_tol=1e-12)
    exit_time = m.mean_exit(1.0, 64)
    assert math.isclose(exit_time[0], 0.25, rel_tol=1e-12)
    assert abs(exit_time[-1]) < 1e-14
    assert math.isclose(m.lambda1_shooting(1.0), 5.783185962946784, rel_tol=1e-8)
    ratios = m.moments(1.0, 2)["ratios"]
    assert math.isclose(ratios[0], 8.0, rel_tol=1e-10)
    assert math.isclose(ratios[1], 6.0, rel_tol=1e-10)


def test_model_balance_and_eigenvalue_routes():
    m = gb.Model("hyperbolic(1)", probe=2.0)
    report = m.balance_check(2.0, 64)
    assert report["balanced"] and report["max_disagreement"] < 1e-9
    lam = m.lambda1_moments(1.0)
    assert math.isclose(lam["value"], m.lambda1_shooting(1.0), rel_tol=1e-6)


def test_metric_example():
    g = gb.Metric("example1")
    assert g.label == "example1"
    assert math.isclose(g.omega(1.0, 0.0), 1.5)
    assert g.mean_curvature(0.5, 0.3) > 1.0 / 0.5
    assert g.ball_area(1.0) > math.pi


def test_parse_errors_carry_offsets():
    with pytest.raises(gb.ParseError) as info:
        gb.Model("sphere(x)")
    assert info.value.args[1] == 7
    with pytest.raises(ValueError):
        gb.Metric("perturbed(1, 1.5)")


def test_verify_report_matches_schema():
    jsonschema = pytest.importorskip("jsonschema")
    report = gb.verify(gb.Metric("example1"), gb.Model("euclidean"), 1.0)
    assert all(e["pass"] for e in report["entries"])
    assert report["hypothesis"]["direction"] == "model<=M"
    schema = json.loads(SCHEMA.read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    jsonschema.validate(report, schema, cls=jsonschema.Draft202012Validator)


def test_forced_direction_fails():
    report = gb.verify(
        gb.Metric("example1"), gb.Model("euclidean"), 1.0, n_r=64, n_theta=64, force_direction="model>=M"
    )
    first = next(e for e in report["entries"] if not e["pass"])
    assert first["name"] == "mean_exit"


def test_symmetrize():
    out = gb.symmetrize(gb.Metric("example1"), gb.Model("euclidean"), 1.0)
    assert out["symmetrized_radius"] > 1.0
    assert out["integral_identity"]["manifold"] > 0
    assert out["equimeasurability"]["smooth_deviation"] < 1e-2
    values = out["smooth_value"]
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert values[-1] == 0.0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
