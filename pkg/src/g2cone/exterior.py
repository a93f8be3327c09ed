"""Structure-equation-aware exterior derivative on the cone coframe.

The fixed coframe is indexed 1..7: indices 1..3 are alpha_i = eta_i +
eta~_i, 4..6 are beta_j = eta_{j-3} - eta~_{j-3}, and 7 is dr.  Each
left-invariant sphere coframe obeys d(eta_1) = -2 eta_2 ^ eta_3 and its
cyclic images, which in the alpha/beta basis becomes the table below.
Coefficients depend on (r, t) only, so d adds dr ^ (dc/dr) omega on top
of the structure-constant terms.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from enum import IntEnum
from typing import Callable, Dict, Mapping, Tuple

from . import coeffs
from .coeffs import EvaluationError, Expr
from .forms import KForm, basis_1form


class CoframeIndex(IntEnum):
    """The seven coframe slots; ordering 1 < 2 < ... < 7 fixes orientation."""

    ALPHA_1 = 1
    ALPHA_2 = 2
    ALPHA_3 = 3
    BETA_4 = 4
    BETA_5 = 5
    BETA_6 = 6
    DR = 7


def alpha(i: int) -> KForm:
    if i not in (1, 2, 3):
        raise ValueError("alpha index must be 1, 2 or 3")
    return basis_1form(i)

def beta(j: int) -> KForm:
    if j not in (4, 5, 6):
        raise ValueError("beta index must be 4, 5 or 6")
    return basis_1form(j)

def dr() -> KForm:
    return basis_1form(7)


def _two_form(i1, j1, i2, j2, sign=-1) -> KForm:
    return KForm.monomial((i1, j1), sign) + KForm.monomial((i2, j2), sign)


# d of each generator in the alpha/beta/dr basis, derived from the raw
# Cartan relations (see structure_table_eta and tests for the rederivation):
#   d alpha_1 = -(alpha_2^alpha_3 + beta_5^beta_6),  cyclic in (123)/(456)
#   d beta_4  = -(alpha_2^beta_6 + beta_5^alpha_3),  cyclic
STRUCTURE_ALPHA_BETA: Dict[int, KForm] = {
    1: _two_form(2, 3, 5, 6),
    2: _two_form(3, 1, 6, 4),
    3: _two_form(1, 2, 4, 5),
    4: _two_form(2, 6, 5, 3),
    5: _two_form(3, 4, 6, 1),
    6: _two_form(1, 5, 4, 2),
    7: KForm.zero(2),
}

# Raw Cartan table in the eta basis: indices 1..3 are eta_i on the first
# sphere, 4..6 are eta~_i on the second, 7 is dr.
STRUCTURE_ETA: Dict[int, KForm] = {
    1: KForm.monomial((2, 3), -2),
    2: KForm.monomial((3, 1), -2),
    3: KForm.monomial((1, 2), -2),
    4: KForm.monomial((5, 6), -2),
    5: KForm.monomial((6, 4), -2),
    6: KForm.monomial((4, 5), -2),
    7: KForm.zero(2),
}

# alpha/beta generators expanded in the eta basis.
_ETA_EXPANSION: Dict[int, KForm] = {
    1: KForm.monomial((1,)) + KForm.monomial((4,)),
    2: KForm.monomial((2,)) + KForm.monomial((5,)),
    3: KForm.monomial((3,)) + KForm.monomial((6,)),
    4: KForm.monomial((1,)) - KForm.monomial((4,)),
    5: KForm.monomial((2,)) - KForm.monomial((5,)),
    6: KForm.monomial((3,)) - KForm.monomial((6,)),
    7: KForm.monomial((7,)),
}


def to_eta_basis(form: KForm) -> KForm:
    """Re-express an alpha/beta/dr form over the raw eta/eta~/dr coframe."""
    out = KForm.zero(form.degree)
    for idx, c in form.terms.items():
        expanded = KForm.constant(1)
        for i in idx:
            expanded = expanded.wedge(_ETA_EXPANSION[i])
        out = out + expanded.scaled(c)
    return out


def _d_monomial(idx: Tuple[int, ...], table: Mapping[int, KForm]) -> KForm:
    out = KForm.zero(len(idx) + 1)
    for j, gen in enumerate(idx):
        left = KForm.monomial(idx[:j]) if j else KForm.constant(1)
        right = KForm.monomial(idx[j + 1 :]) if j + 1 < len(idx) else KForm.constant(1)
        sign = 1 if j % 2 == 0 else -1
        piece = left.wedge(table[gen]).wedge(right)
        out = out + (piece if sign > 0 else -piece)
    return out


def d(form: KForm, table: Mapping[int, KForm] = STRUCTURE_ALPHA_BETA) -> KForm:
    """Exterior derivative with symbolic coefficients.

    On a monomial c * e^I this is (dc/dr) dr ^ e^I + c * d(e^I), with
    d(e^I) assembled from the structure table by the antiderivation rule.
    """
    out = KForm.zero(form.degree + 1)
    dr_form = basis_1form(7)
    for idx, c in form.terms.items():
        if not isinstance(c, Expr):
            raise TypeError("d needs symbolic coefficients; numeric forms have lost their r-dependence")
        dc = coeffs.differentiate(c, "r")
        if not coeffs.is_zero(dc):
            out = out + dr_form.wedge(KForm.monomial(idx)).scaled(dc)
        structural = _d_monomial(idx, table)
        out = out + structural.scaled(c)
    return out


def t_derivative(form: KForm) -> KForm:
    """Termwise d/dt of the coefficients (the coframe itself is static)."""
    out: Dict[Tuple[int, ...], Expr] = {}
    for idx, c in form.terms.items():
        if not isinstance(c, Expr):
            raise TypeError("t_derivative needs symbolic coefficients")
        out[idx] = coeffs.differentiate(c, "t")
    return KForm(form.degree, out)


class Profile(ABC):
    """Numeric values of A, B and their partials at points (r, t).

    Implementations must keep A > 0 and B > 0 on their domain; a zero of
    either means the associated metric degenerates.
    """

    @abstractmethod
    def partial(self, name: str, dr_order: int, dt_order: int, r: float, t: float) -> float:
        """Value of d^{i+j} name / dr^i dt^j at (r, t)."""

    def A(self, r: float, t: float = 0.0) -> float:
        return self.partial("A", 0, 0, r, t)

    def B(self, r: float, t: float = 0.0) -> float:
        return self.partial("B", 0, 0, r, t)

    def A_r(self, r: float, t: float = 0.0) -> float:
        return self.partial("A", 1, 0, r, t)

    def B_r(self, r: float, t: float = 0.0) -> float:
        return self.partial("B", 1, 0, r, t)

    def A_t(self, r: float, t: float = 0.0) -> float:
        return self.partial("A", 0, 1, r, t)

    def B_t(self, r: float, t: float = 0.0) -> float:
        return self.partial("B", 0, 1, r, t)


class PointProfile(Profile):
    """Fixed symbol values, independent of the evaluation point.

    Useful for random-profile sweeps where only the pointwise values of
    A, B and low-order partials matter.  Unsupplied partials raise, which
    doubles as a check that no operation silently needs higher orders.
    """

    def __init__(self, values: Mapping[Tuple[str, int, int], float]):
        self.values = dict(values)
        for name in ("A", "B"):
            v = self.values.get((name, 0, 0))
            if v is None or v <= 0:
                raise ValueError(f"{name} must be supplied and positive, got {v}")

    def partial(self, name, dr_order, dt_order, r, t):
        try:
            return self.values[(name, dr_order, dt_order)]
        except KeyError:
            raise KeyError(
                f"profile does not supply d^{dr_order + dt_order} {name}"
                f"/dr^{dr_order} dt^{dt_order}"
            ) from None


class FunctionProfile(Profile):
    """Partials given as callables (r, t) -> float, keyed by (name, i, j)."""

    def __init__(self, partials: Mapping[Tuple[str, int, int], Callable[[float, float], float]]):
        self.partials = dict(partials)

    def partial(self, name, dr_order, dt_order, r, t):
        try:
            fn = self.partials[(name, dr_order, dt_order)]
        except KeyError:
            raise KeyError(
                f"profile does not supply d^{dr_order + dt_order} {name}"
                f"/dr^{dr_order} dt^{dt_order}"
            ) from None
        return float(fn(r, t))


def constant_profile(A0: float, B0: float, max_order: int = 4) -> FunctionProfile:
    table = {}
    for i in range(max_order + 1):
        for j in range(max_order + 1 - i):
            zero = i + j > 0
            table[("A", i, j)] = (lambda r, t, v=(0.0 if zero else A0): v)
            table[("B", i, j)] = (lambda r, t, v=(0.0 if zero else B0): v)
    return FunctionProfile(table)


def cone_profile() -> FunctionProfile:
    """The torsion-free cone: A = r/3, B = r/sqrt(3)."""
    import math

    s3 = math.sqrt(3.0)
    table = {
        ("A", 0, 0): lambda r, t: r / 3.0,
        ("A", 1, 0): lambda r, t: 1.0 / 3.0,
        ("B", 0, 0): lambda r, t: r / s3,
        ("B", 1, 0): lambda r, t: 1.0 / s3,
    }
    for i in range(5):
        for j in range(5 - i):
            if (i, j) in ((0, 0), (1, 0)):
                continue
            table[("A", i, j)] = lambda r, t: 0.0
            table[("B", i, j)] = lambda r, t: 0.0
    return FunctionProfile(table)


def random_point_profile(rng, with_t_partials: bool = True) -> PointProfile:
    """A and B uniform in (0.1, 10), first partials uniform in (-1, 1)."""
    values = {
        ("A", 0, 0): float(rng.uniform(0.1, 10.0)),
        ("B", 0, 0): float(rng.uniform(0.1, 10.0)),
        ("A", 1, 0): float(rng.uniform(-1.0, 1.0)),
        ("B", 1, 0): float(rng.uniform(-1.0, 1.0)),
    }
    if with_t_partials:
        values[("A", 0, 1)] = float(rng.uniform(-1.0, 1.0))
        values[("B", 0, 1)] = float(rng.uniform(-1.0, 1.0))
    return PointProfile(values)


class GridProfile(Profile):
    """Tabulated A, B on an (r, t) grid, bicubic spline in between.

    Partials come from the spline, so they only match the sampled truth to
    interpolation order; fine for data-driven runs, not for tight
    identity checks.
    """

    def __init__(self, r_grid, t_grid, A_values, B_values):
        from scipy.interpolate import RectBivariateSpline

        if len(r_grid) < 4 or len(t_grid) < 4:
            raise ValueError("grid profile needs at least a 4x4 grid")
        self._A = RectBivariateSpline(r_grid, t_grid, A_values)
        self._B = RectBivariateSpline(r_grid, t_grid, B_values)

    def partial(self, name, dr_order, dt_order, r, t):
        spline = self._A if name == "A" else self._B
        if dr_order > 3 or dt_order > 3:
            raise KeyError("grid profile supplies partials up to order 3 only")
        return float(spline(r, t, dx=dr_order, dy=dt_order)[0, 0])


def eval_form(form: KForm, profile: Profile, r: float, t: float) -> KForm:
    """Evaluate symbolic coefficients at (r, t), keeping the term structure."""
    out: Dict[Tuple[int, ...], float] = {}
    for idx, c in form.terms.items():
        if isinstance(c, float):
            out[idx] = c
            continue
        try:
            out[idx] = coeffs.evaluate(c, profile, r, t)
        except EvaluationError as exc:
            raise EvaluationError(f"term e^{idx}: {exc}") from exc
    return KForm(form.degree, out)
