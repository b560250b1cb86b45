import math

import numpy as np
import pytest
import scipy.optimize

from fbconv.lp_core import (
    DimensionMismatch,
    LpModel,
    LpSolution,
    NumericalBreakdown,
    dualize,
    dump,
    solve,
)


def scipy_reference(model):
    """Independent solve via scipy/HiGHS; returns (status, value)."""
    c = model.objective if model.sense == "min" else -model.objective
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for a, r, v in model.constraints:
        if r == "<=":
            A_ub.append(a); b_ub.append(v)
        elif r == ">=":
            A_ub.append(-a); b_ub.append(-v)
        else:
            A_eq.append(a); b_eq.append(v)
    kw = dict(
        A_ub=np.array(A_ub) if A_ub else None, b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(A_eq) if A_eq else None, b_eq=np.array(b_eq) if b_eq else None,
        bounds=list(zip(
            [None if lo == -math.inf else lo for lo in model.lower],
            [None if up == math.inf else up for up in model.upper])),
        method="highs")
    res = scipy.optimize.linprog(c, **kw)
    if res.status in (2, 3, 4):
        # HiGHS presolve sometimes conflates infeasible and unbounded; settle
        # it with a zero-objective feasibility solve
        feas = scipy.optimize.linprog(np.zeros_like(c), **kw)
        return ("Unbounded" if feas.status == 0 else "Infeasible"), math.nan
    assert res.status == 0, res.message
    v = res.fun if model.sense == "min" else -res.fun
    return "Optimal", v


def test_textbook_max():
    # max 3x + 2y st x + y <= 4, x + 3y <= 6 -> 12 at (4, 0)
    m = LpModel.from_rows("max", [3.0, 2.0],
                          [([1.0, 1.0], "<=", 4.0), ([1.0, 3.0], "<=", 6.0)])
    sol = solve(m)
    assert sol.status == "Optimal"
    assert sol.value == pytest.approx(12.0, abs=1e-9)
    np.testing.assert_allclose(sol.primal, [4.0, 0.0], atol=1e-9)
    np.testing.assert_allclose(sol.dual, [3.0, 0.0], atol=1e-9)


def test_equality_and_free_variable():
    # min x + y st x - y = 1, x + y >= 3, y free
    m = LpModel.from_rows("min", [1.0, 1.0],
                          [([1.0, -1.0], "=", 1.0), ([1.0, 1.0], ">=", 3.0)],
                          lower=[0.0, -math.inf])
    sol = solve(m)
    assert sol.status == "Optimal"
    assert sol.value == pytest.approx(3.0, abs=1e-9)


def test_infeasible():
    m = LpModel.from_rows("min", [1.0], [([1.0], "<=", 1.0), ([1.0], ">=", 2.0)])
    assert solve(m).status == "Infeasible"


def test_unbounded():
    m = LpModel.from_rows("max", [1.0, 0.0], [([0.0, 1.0], "<=", 1.0)])
    assert solve(m).status == "Unbounded"


def test_redundant_equality_rows():
    m = LpModel.from_rows("min", [1.0, 2.0],
                          [([1.0, 1.0], "=", 1.0), ([2.0, 2.0], "=", 2.0)])
    sol = solve(m)
    assert sol.status == "Optimal"
    assert sol.value == pytest.approx(1.0, abs=1e-9)


def test_finite_upper_bounds():
    m = LpModel.from_rows("max", [1.0, 1.0], [([1.0, 2.0], "<=", 10.0)],
                          upper=[3.0, np.inf])
    sol = solve(m)
    assert sol.value == pytest.approx(3.0 + 3.5, abs=1e-9)


def test_shifted_lower_bound():
    # min x st x >= -2 (bound), x <= 5
    m = LpModel.from_rows("min", [1.0], [([1.0], "<=", 5.0)], lower=[-2.0])
    sol = solve(m)
    assert sol.value == pytest.approx(-2.0, abs=1e-9)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        LpModel("min", np.ones(2), np.ones((1, 3)), ("<=",), np.ones(1))
    with pytest.raises(DimensionMismatch):
        LpModel("min", np.ones(2), np.ones((2, 2)), ("<=",), np.ones(2))
    with pytest.raises(DimensionMismatch):
        LpModel("min", [1.0, np.nan], np.ones((1, 2)), ("<=",), np.ones(1))
    with pytest.raises(DimensionMismatch):
        LpModel("huge", np.ones(1), np.ones((1, 1)), ("<=",), np.ones(1))


def test_dualize_textbook_pair():
    p = LpModel.from_rows("max", [3.0, 2.0],
                          [([1.0, 1.0], "<=", 4.0), ([1.0, 3.0], "<=", 6.0)])
    d = dualize(p)
    assert d.sense == "min"
    np.testing.assert_allclose(d.objective, [4.0, 6.0])
    assert d.relations == (">=", ">=")
    np.testing.assert_allclose(d.lower, [0.0, 0.0])
    sd = solve(d)
    assert sd.value == pytest.approx(12.0, abs=1e-9)
    dd = solve(dualize(d))
    assert dd.value == pytest.approx(12.0, abs=1e-9)


def _random_model(rng, n=None, m=None):
    n = n or int(rng.integers(1, 7))
    m = m or int(rng.integers(1, 7))
    A = rng.normal(size=(m, n)).round(2)
    # build around a known feasible point so Optimal cases dominate
    x0 = rng.uniform(0, 2, size=n).round(2)
    rel = [("<=", "=", ">=")[rng.integers(3)] for _ in range(m)]
    b = A @ x0 + np.array([0.3 if r == "<=" else -0.3 if r == ">=" else 0.0 for r in rel])
    c = rng.normal(size=n).round(2)
    sense = "min" if rng.random() < 0.5 else "max"
    lower = np.where(rng.random(n) < 0.15, -math.inf, 0.0)
    return LpModel(sense, c, A, tuple(rel), b, lower=lower)


def test_random_models_against_scipy():
    rng = np.random.default_rng(20240817)
    n_opt = 0
    for _ in range(250):
        m = _random_model(rng)
        ref_status, ref_value = scipy_reference(m)
        sol = solve(m)
        assert sol.status == ref_status, dump(m)
        if ref_status == "Optimal":
            n_opt += 1
            assert sol.value == pytest.approx(ref_value, abs=1e-7 * max(1, abs(ref_value))), dump(m)
            # returned primal is feasible and attains the value
            assert sol.value == pytest.approx(float(m.objective @ sol.primal), abs=1e-9)
            for a, r, v in m.constraints:
                ax = float(a @ sol.primal)
                if r == "<=":
                    assert ax <= v + 1e-9
                elif r == ">=":
                    assert ax >= v - 1e-9
                else:
                    assert ax == pytest.approx(v, abs=1e-9)
    assert n_opt > 150  # the generator is meant to mostly produce solvable LPs


def test_strong_duality_and_complementary_slackness_random():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(150):
        m = _random_model(rng)
        # dualize() wants sign bounds only
        lower = np.where(np.isfinite(m.lower), 0.0, -math.inf)
        m = LpModel(m.sense, m.objective, m.a_matrix, m.relations, m.rhs, lower=lower)
        sol = solve(m)
        if sol.status != "Optimal":
            continue
        d = dualize(m)
        sd = solve(d)
        assert sd.status == "Optimal"
        scale = max(1.0, abs(sol.value))
        assert abs(sd.value - sol.value) <= 1e-7 * scale
        # the multipliers from solve() are themselves a dual-feasible point:
        # same objective value, correct signs, complementary slackness
        assert float(m.rhs @ sol.dual) == pytest.approx(sol.value, abs=1e-7 * scale)
        for i, (a, r, v) in enumerate(m.constraints):
            y = sol.dual[i]
            slack = v - float(a @ sol.primal)
            assert abs(y * slack) <= 1e-7 * scale
            want_pos = (r == ">=") == (m.sense == "min")
            if r == "<=" or r == ">=":
                assert (y >= -1e-9) if want_pos else (y <= 1e-9)
        checked += 1
    assert checked > 80


def test_dual_of_dual_value_matches():
    rng = np.random.default_rng(99)
    for _ in range(60):
        m = _random_model(rng)
        lower = np.where(np.isfinite(m.lower), 0.0, -math.inf)
        m = LpModel(m.sense, m.objective, m.a_matrix, m.relations, m.rhs, lower=lower)
        sol = solve(m)
        if sol.status != "Optimal":
            continue
        dd = dualize(dualize(m))
        sdd = solve(dd)
        assert sdd.status == "Optimal"
        assert sdd.value == pytest.approx(sol.value, abs=1e-7 * max(1, abs(sol.value)))


def test_degenerate_cycling_candidate():
    # classic Beale-style degenerate LP; must terminate via the Bland fallback
    m = LpModel.from_rows(
        "min", [-0.75, 150.0, -0.02, 6.0],
        [([0.25, -60.0, -1.0 / 25.0, 9.0], "<=", 0.0),
         ([0.5, -90.0, -1.0 / 50.0, 3.0], "<=", 0.0),
         ([0.0, 0.0, 1.0, 0.0], "<=", 1.0)])
    sol = solve(m)
    assert sol.status == "Optimal"
    assert sol.value == pytest.approx(-0.05, abs=1e-9)


def test_dump_roundtrip_text():
    m = LpModel.from_rows("max", [1.0, 2.0], [([1.0, 1.0], "<=", 1.0)],
                          lower=[0.0, -math.inf])
    text = dump(m)
    lines = text.strip().splitlines()
    assert lines[0] == "max 1.0 2.0"
    assert lines[1] == "1.0 1.0 <= 1.0"
    assert lines[2] == "bound 1 -inf inf"


def test_dualize_rejects_finite_caps():
    m = LpModel.from_rows("max", [1.0], [([1.0], "<=", 1.0)], upper=[2.0])
    with pytest.raises(Exception):
        dualize(m)
