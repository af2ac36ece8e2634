import math

import pytest

import tracephase as tp


def test_version():
    assert tp.__version__ == "0.1.0"


def test_field_structure():
    F = tp.Field(["-2", "0", "1"])
    assert (F.k, F.k1, F.k2) == (2, 2, 0)
    assert F.trace_form() == [["2", "0"], ["0", "4"]]
    assert F.one_coords() == ["1", "0"]
    emb = F.embeddings()
    assert emb[0].real == pytest.approx(math.sqrt(2))
    assert emb[1].real == pytest.approx(-math.sqrt(2))


def test_phase_eval_routes_agree():
    F = tp.Field(["1", "0", "1"])
    f = tp.Phase(F, 1, {(2,): [1.0, 0.0]})
    x = [0.7, -0.3]
    z = complex(0.7, -0.3)
    assert f.degree == 2
    assert f.eval(x) == pytest.approx(2 * (z * z).real, rel=1e-12)
    e = f.eval_embedded(x)
    assert e.real == pytest.approx(f.eval(x), rel=1e-9)
    assert e.imag == pytest.approx(0.0, abs=1e-9)


def test_integrate_converges():
    F = tp.Field(["0", "1"])
    f = tp.Phase(F, 1, {2: [5.0]})
    r = tp.integrate(f, center=[0.0], r1=2.0, r2=3.0)
    assert r["converged"]
    assert abs(r["value"]) > 0


def test_run_experiment():
    out = tp.run({"experiment": "field", "field": {"minpoly": ["1", "0", "1"]}})
    assert out["summary"]["trace_form"] == [["2", "0"], ["0", "-2"]]
    assert out["csv"].startswith("sigma,")
    assert out["manifest"]["experiment"] == "field"


def test_errors_are_raised():
    with pytest.raises(tp.Error):
        tp.Field(["1"])
    with pytest.raises(tp.Error):
        tp.run({"experiment": "nope"})
    with pytest.raises(tp.Error):
        tp.Phase(tp.Field(["0", "1"]), 1, {})
