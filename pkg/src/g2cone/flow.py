"""The first-order flow on the cone family and its closed-form solution.

The flow couples the time derivative of the cone 3-form to its exterior
derivative through wedging with dr.  On the family with radial profiles
(A, B) it reduces, in characteristic variables x = r + t and y = r - t,
to A = 2 B B_x with 8 B B_xx + 12 B_x^2 = 1, solved in closed form by

    B_x^2 = 1/12 + f(y)/B^3,      x = F(B; f(y)) + h(y)

for integration data f >= 0 and h.  This module provides the closed
forms of d(phi) and d(phi)/dt, the residual of the flow equation, the
quadrature/root-finding solver for B, an independent RK4 characteristic
integrator, and profile adapters that expose the solution to the
exterior-calculus engine.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple, Union

import numpy as np

from . import _kernels as kernels
from . import coeffs, exterior, g2
from .exterior import Profile
from .forms import KForm

SQRT12 = math.sqrt(12.0)


class DomainError(ValueError):
    """Queried point lies outside the solution domain (x <= h(y))."""


class DegenerateMetricError(ValueError):
    """B or the A-radicand hit zero: the associated metric degenerates."""


class HypothesisError(ValueError):
    """Flow data violates a hypothesis the operation requires."""


# ---------------------------------------------------------------------------
# integration data f(y), h(y)
# ---------------------------------------------------------------------------


def _match(y, out):
    return float(out) if np.ndim(y) == 0 else np.asarray(out, dtype=float)


class Func1D:
    """Scalar function of y with a derivative; vectorized over arrays."""

    def value(self, y):
        raise NotImplementedError

    def derivative(self, y):
        raise NotImplementedError

    def __call__(self, y):
        return self.value(y)


class ConstantFunc(Func1D):
    def __init__(self, c: float):
        self.c = float(c)

    def value(self, y):
        return _match(y, np.zeros(np.shape(y)) + self.c)

    def derivative(self, y):
        return _match(y, np.zeros(np.shape(y)))

    def __repr__(self):
        return f"ConstantFunc({self.c})"


class GaussianBump(Func1D):
    """c * exp(-y^2)."""

    def __init__(self, c: float):
        self.c = float(c)

    def value(self, y):
        return _match(y, self.c * np.exp(-np.square(np.asarray(y, dtype=float))))

    def derivative(self, y):
        ya = np.asarray(y, dtype=float)
        return _match(y, -2.0 * ya * self.c * np.exp(-np.square(ya)))

    def __repr__(self):
        return f"GaussianBump({self.c})"


class RationalDecay(Func1D):
    """c / (1 + y^2)."""

    def __init__(self, c: float):
        self.c = float(c)

    def value(self, y):
        return _match(y, self.c / (1.0 + np.square(np.asarray(y, dtype=float))))

    def derivative(self, y):
        ya = np.asarray(y, dtype=float)
        return _match(y, -2.0 * ya * self.c / np.square(1.0 + np.square(ya)))

    def __repr__(self):
        return f"RationalDecay({self.c})"


class TabulatedFunc(Func1D):
    """Monotone cubic (PCHIP) interpolation of sampled data.

    Only C^1, which is a deliberate superset of the smoothness the theory
    assumes; runs built on tables should record that in their metadata.
    """

    def __init__(self, ys: Sequence[float], values: Sequence[float]):
        from scipy.interpolate import PchipInterpolator

        self._interp = PchipInterpolator(np.asarray(ys, dtype=float), np.asarray(values, dtype=float))
        self._deriv = self._interp.derivative()

    def value(self, y):
        return _match(y, self._interp(y))

    def derivative(self, y):
        return _match(y, self._deriv(y))


class CallableFunc(Func1D):
    """Wrap a plain callable; derivative by central differences unless given."""

    def __init__(self, fn: Callable[[float], float], dfn: Callable[[float], float] | None = None,
                 fd_step: float = 1e-6):
        self.fn = fn
        self.dfn = dfn
        self.fd_step = fd_step

    def value(self, y):
        if np.ndim(y) == 0:
            return float(self.fn(float(y)))
        return np.asarray([float(self.fn(float(v))) for v in np.asarray(y).ravel()]).reshape(np.shape(y))

    def derivative(self, y):
        if self.dfn is not None:
            if np.ndim(y) == 0:
                return float(self.dfn(float(y)))
            return np.asarray([float(self.dfn(float(v))) for v in np.asarray(y).ravel()]).reshape(np.shape(y))
        s = self.fd_step
        return (self.value(np.asarray(y) + s) - self.value(np.asarray(y) - s)) / (2.0 * s)


def builtin_func(kind: str, param: float) -> Func1D:
    """Named built-ins: constant c, Gaussian bump c*exp(-y^2), rational
    decay c/(1+y^2)."""
    table = {"constant": ConstantFunc, "gaussian": GaussianBump, "rational": RationalDecay}
    if kind not in table:
        raise ValueError(f"unknown built-in function kind {kind!r}; expected one of {sorted(table)}")
    return table[kind](param)


@dataclass
class FlowData:
    """Integration data of the closed-form solution: the pair (f, h)."""

    f: Func1D
    h: Func1D

    def hypothesis_flags(self, y_lo: float, y_hi: float, samples: int = 512) -> dict:
        """Check the convergence hypotheses on a sampled window:
        f >= 0, h(y) < y, both finite."""
        ys = np.linspace(y_lo, y_hi, samples)
        fv = np.asarray(self.f.value(ys), dtype=float)
        hv = np.asarray(self.h.value(ys), dtype=float)
        return {
            "f_nonneg": bool(np.all(fv >= 0.0)),
            "f_bounded": bool(np.all(np.isfinite(fv))),
            "h_bounded": bool(np.all(np.isfinite(hv))),
            "h_below_identity": bool(np.all(hv < ys)),
        }


# ---------------------------------------------------------------------------
# quadrature, root solve, closed-form solution
# ---------------------------------------------------------------------------


def quadrature_F(Bv: float, fv: float, rel_tol: float = 1e-10) -> float:
    """F(B; f) = int_0^B db / sqrt(1/12 + f/b^3).

    Strictly increasing in B; equals sqrt(12)*B exactly for f = 0.  The
    integrable b^{3/2} cusp at 0 for f > 0 is smoothed by the b = u^2
    substitution inside the kernel.
    """
    return kernels.quad_F(float(Bv), float(fv), rel_tol)


def solve_B(x: float, y: float, data: FlowData, rel_tol: float = 1e-10) -> float:
    """Invert x = F(B; f(y)) + h(y) for the unique positive B."""
    fv = float(data.f.value(y))
    hv = float(data.h.value(y))
    target = x - hv
    if target <= 0.0:
        raise DomainError(f"outside solution domain: x = {x} <= h(y) = {hv}")
    if fv < 0.0:
        raise HypothesisError(f"flow data requires f >= 0, got f({y}) = {fv}")
    return kernels.solve_B(target, fv, rel_tol)


def solution_A(Bv: float, fv: float) -> float:
    """A = 2B sqrt(1/12 + f/B^3); errors when the radicand is not positive."""
    if Bv <= 0.0:
        raise DegenerateMetricError("metric degenerates: B <= 0")
    rad = 1.0 / 12.0 + fv / Bv**3
    if rad <= 0.0:
        raise DegenerateMetricError("metric degenerates: A-radicand <= 0")
    return 2.0 * Bv * math.sqrt(rad)


class _InducedF(Func1D):
    def __init__(self, B0: Func1D, A0: Func1D):
        self.B0 = B0
        self.A0 = A0

    def value(self, y):
        b = np.asarray(self.B0.value(y), dtype=float)
        a = np.asarray(self.A0.value(y), dtype=float)
        t1 = a * a * b / 4.0
        t2 = b**3 / 12.0
        out = t1 - t2
        # exactly cancelling data (the cone family) must give f = 0, not a
        # roundoff-negative value the quadrature would reject
        out = np.where(np.abs(out) <= 8.0 * np.finfo(float).eps * np.maximum(t1, t2), 0.0, out)
        return _match(y, out)

    def derivative(self, y):
        b = np.asarray(self.B0.value(y), dtype=float)
        a = np.asarray(self.A0.value(y), dtype=float)
        db = np.asarray(self.B0.derivative(y), dtype=float)
        da = np.asarray(self.A0.derivative(y), dtype=float)
        return _match(y, a * da * b / 2.0 + a * a * db / 4.0 - b * b * db / 4.0)


class _InducedH(Func1D):
    def __init__(self, B0: Func1D, f: _InducedF, quad_tol: float):
        self.B0 = B0
        self.f = f
        self.quad_tol = quad_tol

    def _one(self, y: float) -> float:
        return y - kernels.quad_F(float(self.B0.value(y)), float(self.f.value(y)), self.quad_tol)

    def value(self, y):
        if np.ndim(y) == 0:
            return self._one(float(y))
        return np.asarray([self._one(float(v)) for v in np.asarray(y).ravel()]).reshape(np.shape(y))

    def _one_deriv(self, y: float) -> float:
        b = float(self.B0.value(y))
        db = float(self.B0.derivative(y))
        fv = float(self.f.value(y))
        dfv = float(self.f.derivative(y))
        bx = math.sqrt(1.0 / 12.0 + fv / b**3)
        out = 1.0 - db / bx
        if dfv != 0.0:
            if fv <= 0.0:
                raise HypothesisError("dF/df is undefined at f = 0; induced h not differentiable here")
            out -= kernels.quad_dFdf(b, fv, self.quad_tol) * dfv
        return out

    def derivative(self, y):
        if np.ndim(y) == 0:
            return self._one_deriv(float(y))
        return np.asarray([self._one_deriv(float(v)) for v in np.asarray(y).ravel()]).reshape(np.shape(y))


def from_initial_data(
    B0: Union[Func1D, Callable[[float], float]],
    A0: Union[Func1D, Callable[[float], float]],
    check_window: Tuple[float, float] | None = None,
    quad_tol: float = 1e-10,
) -> FlowData:
    """Integration data induced by time-zero profiles (where x = y = r):

        f(y) = A0^2 B0 / 4 - B0^3 / 12,   h(y) = y - F(B0(y); f(y)).

    Round trip: solving at x = y reproduces (B0, A0).  If a check window
    is given and f dips negative there, a warning is emitted (the closed
    form is then only defined where its radicand allows).
    """
    if not isinstance(B0, Func1D):
        B0 = CallableFunc(B0)
    if not isinstance(A0, Func1D):
        A0 = CallableFunc(A0)
    f = _InducedF(B0, A0)
    h = _InducedH(B0, f, quad_tol)
    if check_window is not None:
        ys = np.linspace(check_window[0], check_window[1], 256)
        fv = np.asarray(f.value(ys), dtype=float)
        if np.any(fv < 0.0):
            bad = float(ys[int(np.argmin(fv))])
            warnings.warn(f"convergence hypotheses violated: f({bad:.6g}) = {float(np.min(fv)):.6g} < 0")
    return FlowData(f=f, h=h)


@dataclass
class CharacteristicState:
    """Endpoint of an RK4 run along fixed y, plus the first-integral drift."""

    x: float
    B: float
    A: float
    f_drift: float


def characteristic_oracle(
    y: float, B_init: float, A_init: float, x_end: float, steps: int
) -> CharacteristicState:
    """Classical RK4 on 2B_x = A/B, 2A_x = (1 - A^2/B^2)/2 from x = y.

    Independent of the quadrature solver; conserves f = A^2 B/4 - B^3/12
    up to O(steps^-4), which f_drift reports.
    """
    if x_end <= y:
        raise ValueError("x_end must exceed the characteristic start x = y")
    try:
        B, A, drift = kernels.rk4_characteristic(float(B_init), float(A_init), float(y), float(x_end), int(steps))
    except ValueError as exc:
        if "degenerate" in str(exc):
            raise DegenerateMetricError(str(exc)) from None
        raise
    return CharacteristicState(x=float(x_end), B=B, A=A, f_drift=drift)


def residual_ode(B_values: Sequence[float], dx: float) -> np.ndarray:
    """Finite-difference residual of 8 B B_xx + 12 B_x^2 = 1 on a uniform
    grid; returned at interior points."""
    B = np.asarray(B_values, dtype=float)
    if B.ndim != 1 or B.size < 5:
        raise ValueError("need a 1-d grid of at least 5 samples")
    Bx = (B[2:] - B[:-2]) / (2.0 * dx)
    Bxx = (B[2:] - 2.0 * B[1:-1] + B[:-2]) / (dx * dx)
    return 8.0 * B[1:-1] * Bxx + 12.0 * Bx * Bx - 1.0


class FlowSolution:
    """Evaluator for one set of integration data, with an F-memo.

    Read-only after construction apart from the memo dict, whose values
    are immutable floats; concurrent readers are safe and characteristics
    for distinct y are independent.
    """

    def __init__(self, data: FlowData, quad_tol: float = 1e-10, root_tol: float = 1e-10):
        self.data = data
        self.quad_tol = float(quad_tol)
        self.root_tol = float(root_tol)
        self._memo_F: dict = {}

    def F(self, Bv: float, fv: float) -> float:
        key = (Bv, fv)
        hit = self._memo_F.get(key)
        if hit is None:
            hit = kernels.quad_F(float(Bv), float(fv), self.quad_tol)
            self._memo_F[key] = hit
        return hit

    def fh(self, y: float) -> Tuple[float, float]:
        return float(self.data.f.value(y)), float(self.data.h.value(y))

    def B(self, x: float, y: float) -> float:
        return solve_B(x, y, self.data, self.root_tol)

    def A(self, x: float, y: float) -> float:
        fv = float(self.data.f.value(y))
        return solution_A(self.B(x, y), fv)

    def B_many(self, xs, ys) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        fv = np.asarray(self.data.f.value(ys), dtype=float)
        hv = np.asarray(self.data.h.value(ys), dtype=float)
        targets = xs - hv
        if np.any(targets <= 0.0):
            i = int(np.argmin(targets))
            raise DomainError(
                f"outside solution domain: x = {xs.flat[i]} <= h(y) = {hv.flat[i]}"
            )
        if np.any(fv < 0.0):
            i = int(np.argmin(fv))
            raise HypothesisError(f"flow data requires f >= 0, got {fv.flat[i]}")
        return kernels.solve_B_many(targets, fv, self.root_tol)

    def A_many(self, Bs, ys) -> np.ndarray:
        Bs = np.asarray(Bs, dtype=float)
        fv = np.asarray(self.data.f.value(np.asarray(ys, dtype=float)), dtype=float)
        rad = 1.0 / 12.0 + fv / Bs**3
        if np.any(rad <= 0.0) or np.any(Bs <= 0.0):
            raise DegenerateMetricError("metric degenerates")
        return 2.0 * Bs * np.sqrt(rad)

    def profile(self) -> "FlowProfile":
        return FlowProfile(self)


class FlowProfile(Profile):
    """Profile adapter: (A, B) and first partials of the closed-form solution.

    Partials in (r, t) come from the characteristic derivatives via
    d/dr = d/dx + d/dy and d/dt = d/dx - d/dy, with

        B_x = sqrt(1/12 + f/B^3),
        B_y = -B_x (dF/df * f' + h'),
        A_x = 1/6 - f/B^3,
        A_y = 2 B_y B_x + B (f'/B^3 - 3 f B_y / B^4) / B_x.
    """

    def __init__(self, solution: FlowSolution):
        self.solution = solution

    def _state(self, r: float, t: float):
        x, y = r + t, r - t
        sol = self.solution
        fv = float(sol.data.f.value(y))
        B = sol.B(x, y)
        Bx = math.sqrt(1.0 / 12.0 + fv / B**3)
        fprime = float(sol.data.f.derivative(y))
        hprime = float(sol.data.h.derivative(y))
        dFdf = 0.0
        if fprime != 0.0:
            if fv <= 0.0:
                raise HypothesisError("dF/df undefined at f = 0 with varying f")
            dFdf = kernels.quad_dFdf(B, fv, sol.quad_tol)
        By = -Bx * (dFdf * fprime + hprime)
        A = 2.0 * B * Bx
        Ax = 1.0 / 6.0 - fv / B**3
        Ay = 2.0 * By * Bx + B * (fprime / B**3 - 3.0 * fv * By / B**4) / Bx
        return {
            ("A", 0, 0): A,
            ("B", 0, 0): B,
            ("A", 1, 0): Ax + Ay,
            ("B", 1, 0): Bx + By,
            ("A", 0, 1): Ax - Ay,
            ("B", 0, 1): Bx - By,
        }

    def partial(self, name, dr_order, dt_order, r, t):
        if dr_order + dt_order > 1:
            raise KeyError("flow profiles supply first partials only")
        return self._state(r, t)[(name, dr_order, dt_order)]


# ---------------------------------------------------------------------------
# the cone 3-form and the flow equation
# ---------------------------------------------------------------------------


def cone_phi() -> KForm:
    """The cone family 3-form in the alpha/beta/dr coframe: the associative
    form of the rescaled basis (A alpha_i, B beta_j, dr)."""
    return g2.scaled_associative_form(
        (coeffs.A, coeffs.A, coeffs.A, coeffs.B, coeffs.B, coeffs.B, coeffs.ONE)
    )


def _first_partials(profile: Profile, r: float, t: float):
    A = profile.A(r, t)
    B = profile.B(r, t)
    if A == 0.0 or B == 0.0:
        raise DegenerateMetricError("metric degenerates: A or B is zero")
    return A, B


def dphi_closed_form(profile: Profile, r: float, t: float) -> KForm:
    """The appendix formula for d(phi), as a numeric 4-form over the
    rescaled e-basis:

        3 (A/B^2 - B'/B) e^{4567}
        + (B'/B + 2A'/A - 1/A) (e^{1267} + e^{2347} - e^{1357}).
    """
    A, B = _first_partials(profile, r, t)
    Ar = profile.A_r(r, t)
    Br = profile.B_r(r, t)
    c_main = Br / B + 2.0 * Ar / A - 1.0 / A
    c_4567 = 3.0 * (A / (B * B) - Br / B)
    return KForm(4, {
        (4, 5, 6, 7): c_4567,
        (1, 2, 6, 7): c_main,
        (2, 3, 4, 7): c_main,
        (1, 3, 5, 7): -c_main,
    })


def dphi_engine(profile: Profile, r: float, t: float) -> KForm:
    """Generic-engine route: d(cone_phi) evaluated and rescaled; must agree
    with the closed form coefficient-for-coefficient."""
    raw = exterior.eval_form(exterior.d(cone_phi()), profile, r, t)
    return g2.to_scaled_basis(raw, g2.cone_scales_numeric(profile, r, t))


def dphidt_closed_form(profile: Profile, r: float, t: float) -> KForm:
    """Termwise time derivative of the family in the rescaled e-basis:
    3 (B./B) on e^{456}, (B./B + 2A./A) on the three A^2 B terms,
    (B./B + A./A) on the three AB dr-terms."""
    A, B = _first_partials(profile, r, t)
    At = profile.A_t(r, t)
    Bt = profile.B_t(r, t)
    c3 = 3.0 * Bt / B
    c_a2b = Bt / B + 2.0 * At / A
    c_ab = Bt / B + At / A
    return KForm(3, {
        (4, 5, 6): c3,
        (1, 2, 6): -c_a2b,
        (1, 3, 5): c_a2b,
        (2, 3, 4): -c_a2b,
        (1, 4, 7): -c_ab,
        (2, 5, 7): -c_ab,
        (3, 6, 7): -c_ab,
    })


def dphidt_engine(profile: Profile, r: float, t: float) -> KForm:
    raw = exterior.eval_form(exterior.t_derivative(cone_phi()), profile, r, t)
    return g2.to_scaled_basis(raw, g2.cone_scales_numeric(profile, r, t))


def flow_residual(profile: Profile, r: float, t: float, route: str = "closed") -> KForm:
    """(d(phi)/dt ^ dr) - d(phi) at a point, in the rescaled e-basis.

    Vanishes exactly when (A, B) satisfy the reduced system
    B. + B' = A/B and A. + A' = (1 - A^2/B^2)/2; a violation of the
    second equation alone shows up on e^{1267}, e^{2347}, e^{1357} only.
    """
    if route == "engine":
        phi = cone_phi()
        sym = exterior.t_derivative(phi).wedge(exterior.dr()) - exterior.d(phi)
        raw = exterior.eval_form(sym, profile, r, t)
        return g2.to_scaled_basis(raw, g2.cone_scales_numeric(profile, r, t))
    if route != "closed":
        raise ValueError(f"route must be 'closed' or 'engine', got {route!r}")
    dt_part = dphidt_closed_form(profile, r, t)
    wedged = {}
    for idx, c in dt_part.terms.items():
        if 7 in idx:
            continue
        wedged[idx + (7,)] = c
    return KForm(4, wedged) - dphi_closed_form(profile, r, t)


# ---------------------------------------------------------------------------
# CSV interfaces
# ---------------------------------------------------------------------------


def read_initial_data_csv(path, quad_tol: float = 1e-10) -> FlowData:
    """Initial-data table with header y,B0,A0 -> induced flow data."""
    ys, b0, a0 = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["y", "B0", "A0"]:
            raise ValueError(f"initial-data CSV must have header y,B0,A0, got {header}")
        for row in reader:
            if not row:
                continue
            ys.append(float(row[0]))
            b0.append(float(row[1]))
            a0.append(float(row[2]))
    if len(ys) < 2:
        raise ValueError("initial-data CSV needs at least two samples")
    if any(b <= 0 for b in b0) or any(a <= 0 for a in a0):
        raise ValueError("initial data must be strictly positive")
    return from_initial_data(
        TabulatedFunc(ys, b0), TabulatedFunc(ys, a0),
        check_window=(min(ys), max(ys)), quad_tol=quad_tol,
    )
