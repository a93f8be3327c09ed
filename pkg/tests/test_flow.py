"""Flow equation, closed-form solution, characteristics, profiles."""
import math

import numpy as np
import pytest

from g2cone import coeffs, exterior, g2
from g2cone.coeffs import A, B
from g2cone.exterior import Profile
from g2cone.flow import (
    SQRT12,
    CallableFunc,
    CharacteristicState,
    ConstantFunc,
    DegenerateMetricError,
    DomainError,
    FlowData,
    FlowSolution,
    GaussianBump,
    HypothesisError,
    RationalDecay,
    TabulatedFunc,
    builtin_func,
    characteristic_oracle,
    cone_phi,
    dphi_closed_form,
    dphi_engine,
    dphidt_closed_form,
    dphidt_engine,
    flow_residual,
    from_initial_data,
    quadrature_F,
    read_initial_data_csv,
    residual_ode,
    solution_A,
    solve_B,
)
from g2cone.forms import KForm


def _self_similar_data():
    return FlowData(ConstantFunc(0.0), ConstantFunc(0.0))


def _solution_datasets():
    return [
        ("f=0,h=0", FlowData(ConstantFunc(0.0), ConstantFunc(0.0))),
        ("f=1/6,h=0", FlowData(ConstantFunc(1.0 / 6.0), ConstantFunc(0.0))),
        ("f=1/6,h=-1", FlowData(ConstantFunc(1.0 / 6.0), ConstantFunc(-1.0))),
        ("gauss,h=0", FlowData(GaussianBump(0.1), ConstantFunc(0.0))),
        ("gauss,h=-1", FlowData(GaussianBump(0.1), ConstantFunc(-1.0))),
    ]


# -- cone family 3-form ------------------------------------------------------


def test_cone_phi_coefficients():
    phi = cone_phi()
    assert phi.coefficient((4, 5, 6)) == coeffs.powx(B, 3)
    assert phi.coefficient((1, 7, 4)) == A * B
    assert phi.coefficient((6, 2, 1)) == coeffs.powx(A, 2) * B


def test_cone_phi_at_unit_scaling_is_standard_form():
    p = exterior.constant_profile(1.0, 1.0)
    got = exterior.eval_form(cone_phi(), p, 2.0, 0.0)
    std = g2.scaled_associative_form((1.0,) * 7)
    assert got.max_diff(std) < 1e-15


def test_cone_phi_induces_eq2_metric():
    p = exterior.PointProfile({("A", 0, 0): 2.0, ("B", 0, 0): 3.0})
    phi_num = exterior.eval_form(cone_phi(), p, 2.0, 0.0)
    m = g2.metric_from_phi(phi_num)
    assert np.max(np.abs(m - np.diag([4, 4, 4, 9, 9, 9, 1.0]))) < 1e-10


# -- closed forms vs the generic engine --------------------------------------


def test_dphi_closed_form_static_unit_profile():
    p = exterior.constant_profile(1.0, 1.0)
    got = dphi_closed_form(p, 2.0, 0.0)
    expected = KForm(4, {(4, 5, 6, 7): 3.0, (1, 2, 6, 7): -1.0,
                         (2, 3, 4, 7): -1.0, (1, 3, 5, 7): 1.0})
    assert got.max_diff(expected) < 1e-15


def test_dphi_vanishes_on_torsion_free_cone():
    p = exterior.cone_profile()
    for r in (1.5, 3.0, 8.0):
        assert dphi_closed_form(p, r, 0.0).max_abs_coeff() < 1e-14


def test_dphi_engine_matches_closed_form_on_random_profiles():
    rng = np.random.default_rng(40)
    worst = 0.0
    for _ in range(100):
        p = exterior.random_point_profile(rng)
        worst = max(worst, dphi_engine(p, 2.0, 0.0).max_diff(dphi_closed_form(p, 2.0, 0.0)))
    assert worst < 1e-10


def test_dphidt_static_profile_vanishes():
    p = exterior.constant_profile(1.3, 0.7)
    assert dphidt_closed_form(p, 2.0, 0.0).max_abs_coeff() == 0.0


def test_dphidt_coefficient_table():
    # B./B = 1, A. = 0 puts 3 on e^{456}
    p = exterior.PointProfile({
        ("A", 0, 0): 2.0, ("B", 0, 0): 1.5, ("A", 0, 1): 0.0, ("B", 0, 1): 1.5,
        ("A", 1, 0): 0.0, ("B", 1, 0): 0.0,
    })
    got = dphidt_closed_form(p, 2.0, 0.0)
    assert got.coefficient((4, 5, 6)) == pytest.approx(3.0)
    assert got.coefficient((6, 2, 1)) == pytest.approx(1.0)  # B./B + 2A./A
    assert got.coefficient((1, 7, 4)) == pytest.approx(1.0)  # B./B + A./A


def test_dphidt_engine_matches_closed_form():
    rng = np.random.default_rng(41)
    worst = 0.0
    for _ in range(100):
        p = exterior.random_point_profile(rng)
        worst = max(worst, dphidt_engine(p, 2.0, 0.0).max_diff(dphidt_closed_form(p, 2.0, 0.0)))
    assert worst < 1e-10


# -- flow residual -----------------------------------------------------------


def test_flow_residual_vanishes_on_solutions():
    for name, data in _solution_datasets():
        p = FlowSolution(data).profile()
        res = flow_residual(p, 2.5, 1.3).max_abs_coeff()
        assert res < 1e-8, name


def test_flow_residual_static_profile_is_minus_dphi():
    p = exterior.constant_profile(1.0, 1.0)
    res = flow_residual(p, 2.0, 0.0)
    expected = KForm(4, {(4, 5, 6, 7): -3.0, (1, 2, 6, 7): 1.0,
                         (2, 3, 4, 7): 1.0, (1, 3, 5, 7): -1.0})
    assert res.max_diff(expected) < 1e-15


class _Perturbed(Profile):
    def __init__(self, base, offsets):
        self.base = base
        self.offsets = offsets

    def partial(self, name, dr_order, dt_order, r, t):
        out = self.base.partial(name, dr_order, dt_order, r, t)
        return out + self.offsets.get((name, dr_order, dt_order), 0.0)


def test_flow_residual_support_pattern_second_equation_only():
    # shifting A_t leaves the first reduced equation alone: the e^{4567}
    # coefficient stays zero and the three A^2B monomials light up
    base = FlowSolution(_self_similar_data()).profile()
    eps = 1e-3
    p = _Perturbed(base, {("A", 0, 1): eps})
    res = flow_residual(p, 2.5, 1.3)
    assert abs(res.coefficient((4, 5, 6, 7))) < 1e-12
    Aval = base.A(2.5, 1.3)
    for idx in ((1, 2, 6, 7), (2, 3, 4, 7)):
        assert res.coefficient(idx) == pytest.approx(-2.0 * eps / Aval, rel=1e-9)
    assert res.coefficient((1, 3, 5, 7)) == pytest.approx(2.0 * eps / Aval, rel=1e-9)


def test_flow_residual_value_perturbation_hits_first_group():
    base = FlowSolution(_self_similar_data()).profile()
    eps = 1e-3
    p = _Perturbed(base, {("A", 0, 0): eps})
    res = flow_residual(p, 2.5, 1.3)
    Bval = base.B(2.5, 1.3)
    assert res.coefficient((4, 5, 6, 7)) == pytest.approx(-3.0 * eps / Bval**2, rel=1e-6)


def test_flow_residual_routes_agree():
    rng = np.random.default_rng(42)
    for _ in range(20):
        p = exterior.random_point_profile(rng)
        closed = flow_residual(p, 2.0, 0.0, route="closed")
        engine = flow_residual(p, 2.0, 0.0, route="engine")
        assert closed.max_diff(engine) < 1e-10
    with pytest.raises(ValueError, match="route"):
        flow_residual(p, 2.0, 0.0, route="fancy")


# -- quadrature / solver front ends -------------------------------------------


def test_quadrature_F_examples():
    assert quadrature_F(0.0, 7.0) == 0.0
    assert quadrature_F(1.0, 0.0) == pytest.approx(SQRT12, abs=0)
    assert quadrature_F(1.0, 1.0 / 12.0) == pytest.approx(1.1672100465226582, abs=1e-10)


def test_solve_B_examples():
    data0 = _self_similar_data()
    assert solve_B(SQRT12, 5.0, data0) == 1.0
    data_h = FlowData(ConstantFunc(0.0), ConstantFunc(1.0))
    assert solve_B(SQRT12 + 1.0, 5.0, data_h) == 1.0


def test_solve_B_outside_domain():
    data_h = FlowData(ConstantFunc(0.0), ConstantFunc(1.0))
    with pytest.raises(DomainError, match="outside solution domain"):
        solve_B(0.5, 5.0, data_h)


def test_solve_B_rejects_negative_f():
    data = FlowData(ConstantFunc(-1.0), ConstantFunc(0.0))
    with pytest.raises(HypothesisError, match="f >= 0"):
        solve_B(2.0, 5.0, data)


def test_solution_A_examples():
    assert solution_A(1.0, 0.0) == pytest.approx(2.0 / SQRT12, abs=1e-15)
    assert solution_A(1.0, 1.0 / 12.0) == pytest.approx(2.0 * math.sqrt(1.0 / 6.0), abs=1e-14)


def test_solution_A_inverse_identity():
    rng = np.random.default_rng(43)
    for _ in range(50):
        b = float(rng.uniform(0.1, 5.0))
        f = float(rng.uniform(0.0, 2.0))
        a = solution_A(b, f)
        assert a * a / (4 * b * b) - 1.0 / 12.0 == pytest.approx(f / b**3, rel=1e-12)


def test_solution_A_degenerate_radicand():
    with pytest.raises(DegenerateMetricError, match="degenerates"):
        solution_A(1.0, -1.0)
    with pytest.raises(DegenerateMetricError):
        solution_A(0.0, 0.5)


# -- initial data ------------------------------------------------------------


def test_from_initial_data_constants():
    data = from_initial_data(lambda y: 1.0, lambda y: 1.0)
    assert data.f.value(3.0) == pytest.approx(1.0 / 6.0, abs=1e-15)


def test_from_initial_data_cone_compatible():
    data = from_initial_data(lambda y: 1.0, lambda y: 1.0 / math.sqrt(3.0))
    assert abs(data.f.value(2.0)) < 1e-15


def test_from_initial_data_self_similar_is_exact():
    data = from_initial_data(
        CallableFunc(lambda y: y / SQRT12, lambda y: 1.0 / SQRT12),
        CallableFunc(lambda y: y / 6.0, lambda y: 1.0 / 6.0),
    )
    for y in (1.5, 3.0, 7.0):
        assert abs(data.f.value(y)) < 1e-14
        assert abs(data.h.value(y)) < 1e-12


def test_from_initial_data_round_trip():
    data = from_initial_data(lambda y: 1.0, lambda y: 1.0)
    sol = FlowSolution(data)
    for y in (1.0, 2.5, 6.0):
        assert sol.B(y, y) == pytest.approx(1.0, abs=1e-9)
        assert sol.A(y, y) == pytest.approx(1.0, abs=1e-9)


def test_from_initial_data_warns_on_negative_f():
    with pytest.warns(UserWarning, match="hypotheses violated"):
        from_initial_data(lambda y: 1.0, lambda y: 0.1, check_window=(1.0, 4.0))


# -- characteristics ---------------------------------------------------------


def test_characteristic_oracle_self_similar():
    y = 2.0
    state = characteristic_oracle(y, y / SQRT12, y / 6.0, 11.0, 4000)
    assert isinstance(state, CharacteristicState)
    assert state.B == pytest.approx(11.0 / SQRT12, abs=1e-10)
    assert state.A == pytest.approx(11.0 / 6.0, abs=1e-10)


def test_characteristic_drift_small():
    state = characteristic_oracle(2.0, 1.0, 1.0, 12.0, 10000)
    assert state.f_drift < 1e-10


def test_characteristic_agrees_with_closed_form():
    data = FlowData(ConstantFunc(1.0), ConstantFunc(0.0))
    sol = FlowSolution(data)
    y = 2.0
    state = characteristic_oracle(y, sol.B(y, y), sol.A(y, y), 5.0, 10000)
    assert abs(state.B - sol.B(5.0, y)) < 1e-6
    assert abs(state.A - sol.A(5.0, y)) < 1e-6


def test_characteristic_requires_forward_run():
    with pytest.raises(ValueError, match="exceed"):
        characteristic_oracle(3.0, 1.0, 1.0, 2.0, 100)


def test_characteristic_degenerate_message():
    # B < 0 start is rejected with the degeneracy error
    with pytest.raises((DegenerateMetricError, ValueError), match="degenerate"):
        characteristic_oracle(2.0, -1.0, 1.0, 5.0, 100)


# -- finite-difference residual ------------------------------------------------


def test_residual_ode_self_similar_line():
    # zero up to eps/dx^2 second-difference roundoff
    x = np.linspace(2.0, 3.0, 11)
    res = residual_ode(x / SQRT12, float(x[1] - x[0]))
    assert np.max(np.abs(res)) < 1e-12


def test_residual_ode_linear_B_gives_eleven():
    x = np.linspace(2.0, 3.0, 11)
    res = residual_ode(x, float(x[1] - x[0]))
    assert np.allclose(res, 11.0, atol=1e-10)


def test_residual_ode_on_solution_samples():
    from g2cone import _kernels

    dx = 1e-3
    xs = np.arange(3.0, 3.1 + dx / 2, dx)
    Bs = np.array([_kernels.solve_B(float(x), 1.0, 1e-14) for x in xs])
    res = residual_ode(Bs, dx)
    assert np.max(np.abs(res)) <= 1e-6


def test_residual_ode_needs_five_points():
    with pytest.raises(ValueError, match="at least 5"):
        residual_ode(np.ones(4), 0.1)


# -- FlowSolution / FlowProfile -----------------------------------------------


def test_solution_batch_matches_scalar():
    data = FlowData(GaussianBump(0.2), ConstantFunc(-0.5))
    sol = FlowSolution(data)
    xs = np.array([2.0, 3.0, 5.0])
    ys = np.array([1.0, 1.5, 2.0])
    batch = sol.B_many(xs, ys)
    for x, y, b in zip(xs, ys, batch):
        assert b == pytest.approx(sol.B(float(x), float(y)), abs=0)


def test_solution_memoizes_F():
    sol = FlowSolution(FlowData(ConstantFunc(1.0), ConstantFunc(0.0)))
    v1 = sol.F(1.5, 1.0)
    assert (1.5, 1.0) in sol._memo_F
    assert sol.F(1.5, 1.0) is v1


def test_flow_profile_partials_match_finite_differences():
    data = FlowData(GaussianBump(0.1), ConstantFunc(-1.0))
    p = FlowSolution(data, root_tol=1e-13).profile()
    r0, t0 = 2.5, 1.3
    step = 1e-4
    for name in ("A", "B"):
        exact_r = p.partial(name, 1, 0, r0, t0)
        exact_t = p.partial(name, 0, 1, r0, t0)
        fd_r = (p.partial(name, 0, 0, r0 + step, t0) - p.partial(name, 0, 0, r0 - step, t0)) / (2 * step)
        fd_t = (p.partial(name, 0, 0, r0, t0 + step) - p.partial(name, 0, 0, r0, t0 - step)) / (2 * step)
        assert fd_r == pytest.approx(exact_r, abs=5e-7)
        assert fd_t == pytest.approx(exact_t, abs=5e-7)


def test_flow_profile_higher_partials_unsupported():
    p = FlowSolution(_self_similar_data()).profile()
    with pytest.raises(KeyError, match="first partials"):
        p.partial("A", 2, 0, 2.0, 0.0)


def test_flow_profile_self_similar_values():
    p = FlowSolution(_self_similar_data()).profile()
    r, t = 3.0, 1.0
    x = r + t
    assert p.B(r, t) == pytest.approx(x / SQRT12, abs=1e-12)
    assert p.A(r, t) == pytest.approx(x / 6.0, abs=1e-12)
    assert p.B_r(r, t) == pytest.approx(1.0 / SQRT12, abs=1e-12)
    assert p.A_t(r, t) == pytest.approx(1.0 / 6.0, abs=1e-12)


# -- integration data helpers --------------------------------------------------


def test_builtin_funcs():
    assert builtin_func("constant", 2.0).value(5.0) == 2.0
    assert builtin_func("gaussian", 2.0).value(0.0) == 2.0
    assert builtin_func("rational", 2.0).value(1.0) == 1.0
    with pytest.raises(ValueError, match="unknown built-in"):
        builtin_func("spline", 1.0)


@pytest.mark.parametrize("fn", [ConstantFunc(0.7), GaussianBump(0.3), RationalDecay(1.1)])
def test_builtin_derivatives_match_fd(fn):
    for y in (-1.5, 0.0, 2.0):
        fd = (fn.value(y + 1e-6) - fn.value(y - 1e-6)) / 2e-6
        assert fn.derivative(y) == pytest.approx(fd, abs=1e-9)


def test_builtin_vectorization():
    fn = GaussianBump(0.5)
    ys = np.array([0.0, 1.0, 2.0])
    vals = fn.value(ys)
    assert vals.shape == (3,)
    assert vals[0] == 0.5


def test_tabulated_func_reproduces_linear_data():
    ys = np.linspace(0.0, 5.0, 11)
    fn = TabulatedFunc(ys, 2.0 * ys + 1.0)
    assert fn.value(2.3) == pytest.approx(5.6, abs=1e-12)
    assert fn.derivative(2.3) == pytest.approx(2.0, abs=1e-12)


def test_hypothesis_flags():
    data = FlowData(GaussianBump(0.1), ConstantFunc(-1.0))
    flags = data.hypothesis_flags(1.0, 4.0)
    assert all(flags.values())
    bad = FlowData(ConstantFunc(0.0), CallableFunc(lambda y: y, lambda y: 1.0))
    assert not bad.hypothesis_flags(1.0, 4.0)["h_below_identity"]
    neg = FlowData(ConstantFunc(-0.2), ConstantFunc(0.0))
    assert not neg.hypothesis_flags(1.0, 4.0)["f_nonneg"]


def test_read_initial_data_csv(tmp_path):
    path = tmp_path / "init.csv"
    ys = np.linspace(0.5, 6.0, 12)
    rows = ["y,B0,A0"] + [f"{y},{1.0},{1.0}" for y in ys]
    path.write_text("\n".join(rows))
    data = read_initial_data_csv(path)
    assert data.f.value(3.0) == pytest.approx(1.0 / 6.0, abs=1e-12)
    sol = FlowSolution(data)
    assert sol.B(3.0, 3.0) == pytest.approx(1.0, abs=1e-9)


def test_read_initial_data_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError, match="y,B0,A0"):
        read_initial_data_csv(path)


def test_read_initial_data_csv_rejects_nonpositive(tmp_path):
    path = tmp_path / "neg.csv"
    path.write_text("y,B0,A0\n1.0,1.0,1.0\n2.0,-1.0,1.0\n")
    with pytest.raises(ValueError, match="positive"):
        read_initial_data_csv(path)
