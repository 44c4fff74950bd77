import math
from dataclasses import replace

import numpy as np
import pytest

from hamlink.potential import (
    PotentialDefinitionError,
    Sampling,
    check_hypotheses,
    example31_potential,
    replay,
    table_potential,
    zero_potential,
)
from hamlink.spectral import lambda_min

CONSTS = {"b": 1.0, "delta": 0.25, "d1": 1.0, "d2": 0.01, "beta": 3.0}

WAVY = {
    "period": 7,
    "terms": [
        {"arg": "x", "kind": "abspow", "coeff": -0.5, "power": 3.5},
        {"arg": "y", "kind": "abspow", "coeff": -1.0, "power": 2.5, "modulation": "cos", "harmonic": 2},
        {"arg": "z", "kind": "square", "coeff": 0.3, "modulation": "sin"},
        {"arg": "xy", "kind": "cross", "coeff": 0.2},
        {"arg": "yz", "kind": "cross", "coeff": -0.1, "residue": 3},
    ],
}


def _plus_y_cubed(m=6):
    return table_potential({"period": m, "terms": [{"arg": "y", "kind": "abspow", "coeff": 1.0, "power": 3}]})


def test_example31_hand_values():
    f = example31_potential(1.0, 3.0, 6)
    assert f(1, 0.0, 0.0, 0.0) == 0
    assert f(4, 1.0, 0.0, 0.0) == pytest.approx(-1.0, abs=1e-15)
    assert f.grad(2, 2.0, 0.0, 0.0)[0] == pytest.approx(-12.0, abs=1e-14)
    assert f.grad(2, 0.0, 0.0, 0.0) == (0.0, 0.0, 0.0)
    assert f.autonomous and f.even
    pts = np.random.default_rng(1).standard_normal((50, 3))
    np.testing.assert_array_equal(f(8, *pts.T), f(2, *pts.T))


def test_example31_coefficient_is_b_lambda_min():
    for m in (5, 6, 13):
        f = example31_potential(2.0, 2.5, m)
        assert f(1, 1.0, 0.0, 0.0) == pytest.approx(-2.0 * lambda_min(m), rel=1e-14)


@pytest.mark.parametrize("beta", [2.0, 1.5, -1.0])
def test_example31_rejects_beta(beta):
    with pytest.raises(ValueError, match="beta"):
        example31_potential(1.0, beta, 6)


def test_table_encoding_matches_example31(rng):
    k = -2.0 * (1 - math.cos(2 * math.pi / 6))
    spec = table_potential(
        {"period": 6, "terms": [{"arg": a, "kind": "abspow", "coeff": k, "power": 3} for a in "xyz"]}
    )
    ref = example31_potential(1.0, 3.0, 6)
    pts = rng.standard_normal((100, 3)) * 3
    ns = rng.integers(-20, 20, 100)
    a, b = spec(ns, *pts.T), ref(ns, *pts.T)
    assert np.all(np.abs(a - b) <= 1e-14 * (1 + np.abs(b)))
    assert spec.autonomous and spec.even


def test_example31_definition_round_trips():
    ref = example31_potential(1.0, 3.0, 6)
    again = table_potential(ref.definition)
    pts = np.random.default_rng(0).standard_normal((20, 3))
    np.testing.assert_allclose(again(1, *pts.T), ref(1, *pts.T), rtol=1e-15)


def test_empty_terms_is_zero():
    f = zero_potential(6)
    assert f(3, 1.0, -2.0, 5.0) == 0
    assert all(g == 0 for g in f.grad(3, 1.0, -2.0, 5.0))


@pytest.mark.parametrize(
    "definition",
    [
        [],
        {"period": 4, "terms": []},
        {"period": 6, "terms": [], "extra": 1},
        {"period": 6, "terms": [{"arg": "w", "kind": "abspow", "coeff": 1, "power": 3}]},
        {"period": 6, "terms": [{"arg": "x", "kind": "abspow", "coeff": 1, "power": 2}]},
        {"period": 6, "terms": [{"arg": "x", "kind": "abspow", "coeff": 1}]},
        {"period": 6, "terms": [{"arg": "x", "kind": "cubic", "coeff": 1}]},
        {"period": 6, "terms": [{"arg": "x", "kind": "cross", "coeff": 1}]},
        {"period": 6, "terms": [{"arg": "x", "kind": "square", "coeff": "a"}]},
        {"period": 6, "terms": [{"arg": "x", "kind": "square", "coeff": 1, "modulation": "tan"}]},
        {"period": 6, "terms": [{"arg": "x", "kind": "square", "coeff": 1, "colour": 1}]},
    ],
)
def test_malformed_definitions(definition):
    with pytest.raises(PotentialDefinitionError):
        table_potential(definition)


def test_plus_y_cubed_is_well_formed():
    f = _plus_y_cubed()
    assert f(1, 0.0, 2.0, 0.0) == 8.0


def _fd_grad(f, n, p, h=1e-5):
    out = []
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        out.append((f(n, *(p + e)) - f(n, *(p - e))) / (2 * h))
    return np.array(out)


@pytest.mark.parametrize(
    "f",
    [example31_potential(1.0, 3.0, 6), example31_potential(0.7, 2.5, 5), table_potential(WAVY)],
    ids=["ex31-b3", "ex31-b2.5", "wavy"],
)
def test_gradient_matches_finite_differences(f, rng):
    for n in range(1, f.period + 1):
        for _ in range(200):
            p = rng.standard_normal(3) * 2
            g = np.array(f.grad(n, *p), dtype=float)
            fd = _fd_grad(f, n, p)
            assert np.linalg.norm(g - fd) <= 1e-6 * max(1.0, np.linalg.norm(g))


@pytest.mark.parametrize("f", [example31_potential(1.0, 3.0, 6), table_potential(WAVY)], ids=["ex31", "wavy"])
def test_evenness_flag_is_sound(f, rng):
    assert f.even
    pts = rng.standard_normal((200, 3)) * 5
    for n in range(1, f.period + 1):
        a, b = f(n, *pts.T), f(n, *(-pts).T)
        assert np.all(np.abs(a - b) <= 1e-12 * (1 + np.abs(a)))


def test_wavy_is_not_autonomous():
    assert not table_potential(WAVY).autonomous


def test_example31_passes_all_hypotheses():
    reports = check_hypotheses(example31_potential(1.0, 3.0, 6), CONSTS)
    assert [r.hypothesis for r in reports] == ["D1", "D2", "D3", "D4"]
    for r in reports:
        assert r.verdict == "pass", (r.hypothesis, r.violations[:3])
        assert r.sample_count > 0


@pytest.mark.parametrize("m,b,beta", [(5, 0.3, 2.5), (10, 2.0, 4.0)])
def test_example31_passes_other_parameters(m, b, beta):
    c = {"b": b, "delta": 1.0, "d1": b * lambda_min(m), "d2": 0.5, "beta": beta}
    assert all(r.passed for r in check_hypotheses(example31_potential(b, beta, m), c))


def test_zero_potential_fails_d3_at_large_norm():
    d1, d2, d3 = check_hypotheses(zero_potential(6), CONSTS, which=("D1", "D2", "D3"))
    assert d1.passed and d2.passed
    assert d3.verdict == "fail"
    assert max(np.linalg.norm(v.point) for v in d3.violations) > 10


def test_plus_y_cubed_fails_d3_with_replayable_witness():
    f = _plus_y_cubed()
    (d3,) = check_hypotheses(f, CONSTS, which=("D3",))
    assert not d3.passed
    worst = max(d3.violations, key=lambda v: abs(v.point[1]))
    assert abs(worst.point[1]) > 10
    lhs, rhs = replay(f, d3, worst)
    assert (lhs, rhs) == (worst.lhs, worst.rhs)
    assert lhs > rhs


def test_checker_detects_period_mismatch():
    # declared period 6 but the coefficient actually repeats with period 7
    bad = table_potential(
        {"period": 6, "terms": [{"arg": "x", "kind": "square", "coeff": 1, "modulation": "cos"}]}
    )
    assert check_hypotheses(bad, CONSTS, which=("D1",))[0].passed
    skewed = replace(bad, eval=lambda n, x, y, z: np.cos(2 * np.pi * np.asarray(n) / 7) * np.asarray(x) ** 2)
    assert not check_hypotheses(skewed, CONSTS, which=("D1",))[0].passed


def test_reports_are_reproducible():
    f = _plus_y_cubed()
    a = check_hypotheses(f, CONSTS, Sampling(seed=3), which=("D3",))
    b = check_hypotheses(f, CONSTS, Sampling(seed=3), which=("D3",))
    assert a == b


def test_check_rejects_bad_constants():
    with pytest.raises(ValueError, match="beta"):
        check_hypotheses(zero_potential(6), {**CONSTS, "beta": 2.0})
    with pytest.raises(ValueError, match="d1"):
        check_hypotheses(zero_potential(6), {**CONSTS, "d1": 0.0})
