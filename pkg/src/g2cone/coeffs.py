"""Symbolic coefficients for forms on the cone.

Expressions are trees over exact rational constants and the two radial
profile symbols A, B together with their formal r- and t-partials.
Canonicalization is purely syntactic (flatten, sort, merge constants,
collect like terms); it is deliberately not a full computer algebra
system.  Equality checks that fail syntactically can fall back to
:func:`numerically_equal`.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import TYPE_CHECKING, Union

if TYPE_CHECKING:
    from .exterior import Profile

Scalar = Union[int, Fraction]

SYMBOL_NAMES = ("A", "B")


class EvaluationError(ValueError):
    """Raised when an expression cannot be evaluated at a point."""


class Expr:
    """Base class for coefficient expressions. Instances are immutable.

    Arithmetic with a float degrades an exact rational to a float (numeric
    context wins); floats never combine with symbolic nodes.
    """

    __slots__ = ()

    def _float(self):
        if isinstance(self, Rat):
            return float(self.value)
        raise TypeError("cannot mix floats with symbolic (non-constant) coefficients")

    def __add__(self, other):
        if isinstance(other, float):
            return self._float() + other
        return add(self, as_expr(other))

    def __radd__(self, other):
        if isinstance(other, float):
            return other + self._float()
        return add(as_expr(other), self)

    def __sub__(self, other):
        if isinstance(other, float):
            return self._float() - other
        return add(self, mul(RAT_MINUS_ONE, as_expr(other)))

    def __rsub__(self, other):
        if isinstance(other, float):
            return other - self._float()
        return add(as_expr(other), mul(RAT_MINUS_ONE, self))

    def __mul__(self, other):
        if isinstance(other, float):
            return self._float() * other
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        if isinstance(other, float):
            return other * self._float()
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        if isinstance(other, float):
            return self._float() / other
        return mul(self, powx(as_expr(other), Fraction(-1)))

    def __rtruediv__(self, other):
        if isinstance(other, float):
            return other / self._float()
        return mul(as_expr(other), powx(self, Fraction(-1)))

    def __pow__(self, exponent):
        return powx(self, Fraction(exponent))

    def __neg__(self):
        return mul(RAT_MINUS_ONE, self)


class Rat(Expr):
    """Exact rational constant."""

    __slots__ = ("value",)

    def __init__(self, value):
        object.__setattr__(self, "value", Fraction(value))

    def __setattr__(self, *a):
        raise AttributeError("Rat is immutable")

    def __eq__(self, other):
        return isinstance(other, Rat) and self.value == other.value

    def __hash__(self):
        return hash(("Rat", self.value))

    def __repr__(self):
        return f"Rat({self.value})"


class Sym(Expr):
    """Profile symbol: A or B with formal derivative orders (dr, dt)."""

    __slots__ = ("name", "dr", "dt")

    def __init__(self, name: str, dr: int = 0, dt: int = 0):
        if name not in SYMBOL_NAMES:
            raise ValueError(f"unknown symbol {name!r}; expected one of {SYMBOL_NAMES}")
        if dr < 0 or dt < 0:
            raise ValueError("derivative orders must be nonnegative")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "dr", dr)
        object.__setattr__(self, "dt", dt)

    def __setattr__(self, *a):
        raise AttributeError("Sym is immutable")

    def __eq__(self, other):
        return (
            isinstance(other, Sym)
            and self.name == other.name
            and self.dr == other.dr
            and self.dt == other.dt
        )

    def __hash__(self):
        return hash(("Sym", self.name, self.dr, self.dt))

    def __repr__(self):
        return f"Sym({self.name!r}, dr={self.dr}, dt={self.dt})"


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple):
        object.__setattr__(self, "terms", terms)

    def __setattr__(self, *a):
        raise AttributeError("Add is immutable")

    def __eq__(self, other):
        return isinstance(other, Add) and self.terms == other.terms

    def __hash__(self):
        return hash(("Add", self.terms))

    def __repr__(self):
        return f"Add({self.terms!r})"


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple):
        object.__setattr__(self, "factors", factors)

    def __setattr__(self, *a):
        raise AttributeError("Mul is immutable")

    def __eq__(self, other):
        return isinstance(other, Mul) and self.factors == other.factors

    def __hash__(self):
        return hash(("Mul", self.factors))

    def __repr__(self):
        return f"Mul({self.factors!r})"


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: Fraction):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exp", Fraction(exp))

    def __setattr__(self, *a):
        raise AttributeError("Pow is immutable")

    def __eq__(self, other):
        return isinstance(other, Pow) and self.base == other.base and self.exp == other.exp

    def __hash__(self):
        return hash(("Pow", self.base, self.exp))

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exp})"


ZERO = Rat(0)
ONE = Rat(1)
RAT_MINUS_ONE = Rat(-1)

# The two profile symbols; derivatives via sym().
A = Sym("A")
B = Sym("B")


def sym(name: str, dr: int = 0, dt: int = 0) -> Sym:
    return Sym(name, dr, dt)


def as_expr(x) -> Expr:
    """Coerce ints and Fractions to Rat; floats are rejected (numeric
    coefficients belong to evaluated forms, not symbolic ones)."""
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Rat(x)
    raise TypeError(f"cannot use {type(x).__name__} as a symbolic coefficient")


def is_zero(e: Expr) -> bool:
    return isinstance(e, Rat) and e.value == 0


def is_one(e: Expr) -> bool:
    return isinstance(e, Rat) and e.value == 1


def sort_key(e: Expr):
    if isinstance(e, Rat):
        return (0, e.value.numerator, e.value.denominator)
    if isinstance(e, Sym):
        return (1, e.name, e.dr, e.dt)
    if isinstance(e, Pow):
        return (2, sort_key(e.base), e.exp.numerator, e.exp.denominator)
    if isinstance(e, Mul):
        return (3, tuple(sort_key(f) for f in e.factors))
    if isinstance(e, Add):
        return (4, tuple(sort_key(t) for t in e.terms))
    raise TypeError(type(e))


def is_positive_known(e: Expr) -> bool:
    """True when the expression is provably positive on the profile domain
    (A > 0 and B > 0 by contract; derivative symbols have unknown sign)."""
    if isinstance(e, Rat):
        return e.value > 0
    if isinstance(e, Sym):
        return e.dr == 0 and e.dt == 0
    if isinstance(e, Mul):
        return all(is_positive_known(f) for f in e.factors)
    if isinstance(e, Pow):
        return is_positive_known(e.base)
    if isinstance(e, Add):
        return all(is_positive_known(t) for t in e.terms)
    return False


def _as_base_exp(e: Expr):
    if isinstance(e, Pow):
        return e.base, e.exp
    return e, Fraction(1)


def mul(*factors: Expr) -> Expr:
    """Canonicalized product: flatten, merge rationals, collect powers of
    equal bases, sort."""
    flat = []
    stack = list(factors)
    while stack:
        f = stack.pop(0)
        if isinstance(f, Mul):
            stack = list(f.factors) + stack
        else:
            flat.append(f)

    const = Fraction(1)
    powers: dict = {}
    order: list = []
    for f in flat:
        if isinstance(f, Rat):
            const *= f.value
            continue
        base, exp = _as_base_exp(f)
        key = (type(base).__name__, sort_key(base))
        if key not in powers:
            powers[key] = [base, exp]
            order.append(key)
        else:
            powers[key][1] += exp
    if const == 0:
        return ZERO

    rebuilt = []
    for key in order:
        base, exp = powers[key]
        p = powx(base, exp)
        if is_one(p):
            continue
        if isinstance(p, Rat):
            const *= p.value
            continue
        rebuilt.append(p)
    rebuilt.sort(key=sort_key)

    if not rebuilt:
        return Rat(const)
    if const == 0:
        return ZERO
    if len(rebuilt) == 1 and isinstance(rebuilt[0], Add) and const != 1:
        # fold a plain rational prefactor into the sum (not full expansion)
        return add(*(mul(Rat(const), t) for t in rebuilt[0].terms))
    if const != 1:
        rebuilt = [Rat(const)] + rebuilt
    if len(rebuilt) == 1:
        return rebuilt[0]
    return Mul(tuple(rebuilt))


def _coeff_rest(term: Expr):
    """Split a canonical term into (rational coefficient, rest)."""
    if isinstance(term, Rat):
        return term.value, ONE
    if isinstance(term, Mul) and isinstance(term.factors[0], Rat):
        rest = term.factors[1:]
        rest_expr = rest[0] if len(rest) == 1 else Mul(rest)
        return term.factors[0].value, rest_expr
    return Fraction(1), term


def add(*terms: Expr) -> Expr:
    """Canonicalized sum: flatten, collect like terms, sort."""
    flat = []
    stack = list(terms)
    while stack:
        t = stack.pop(0)
        if isinstance(t, Add):
            stack = list(t.terms) + stack
        else:
            flat.append(t)

    const = Fraction(0)
    collected: dict = {}
    order: list = []
    for t in flat:
        if isinstance(t, Rat):
            const += t.value
            continue
        coeff, rest = _coeff_rest(t)
        key = sort_key(rest)
        if key not in collected:
            collected[key] = [coeff, rest]
            order.append(key)
        else:
            collected[key][0] += coeff

    rebuilt = []
    for key in order:
        coeff, rest = collected[key]
        if coeff == 0:
            continue
        rebuilt.append(rest if coeff == 1 else mul(Rat(coeff), rest))
    rebuilt.sort(key=sort_key)

    if const != 0:
        rebuilt = [Rat(const)] + rebuilt
    if not rebuilt:
        return ZERO
    if len(rebuilt) == 1:
        return rebuilt[0]
    return Add(tuple(rebuilt))


def _exact_rational_pow(value: Fraction, exp: Fraction):
    """Rational ** rational when the result is exactly rational, else None."""
    if exp.denominator == 1:
        if value == 0 and exp < 0:
            raise EvaluationError("0 raised to a negative power")
        return value ** exp
    if value < 0:
        return None
    q = exp.denominator
    num = round(value.numerator ** (1.0 / q))
    den = round(value.denominator ** (1.0 / q))
    if num**q == value.numerator and den**q == value.denominator:
        return Fraction(num, den) ** Fraction(exp.numerator)
    return None


def powx(base: Expr, exp) -> Expr:
    """Canonicalized power with rational exponent."""
    exp = Fraction(exp)
    if exp == 0:
        return ONE
    if exp == 1:
        return base
    if isinstance(base, Rat):
        exact = _exact_rational_pow(base.value, exp)
        if exact is not None:
            return Rat(exact)
        return Pow(base, exp)
    if isinstance(base, Pow):
        # (x^a)^n for integer n is always x^(a n); for fractional n only
        # when x is known positive ((x^2)^(1/2) must stay |x| otherwise).
        if exp.denominator == 1 or is_positive_known(base.base):
            return powx(base.base, base.exp * exp)
        return Pow(base, exp)
    if isinstance(base, Mul) and (
        exp.denominator == 1 or all(is_positive_known(f) for f in base.factors)
    ):
        return mul(*(powx(f, exp) for f in base.factors))
    return Pow(base, exp)


def differentiate(e: Expr, var: str) -> Expr:
    """Formal partial derivative with respect to "r" or "t"."""
    if var not in ("r", "t"):
        raise ValueError(f"var must be 'r' or 't', got {var!r}")
    if isinstance(e, Rat):
        return ZERO
    if isinstance(e, Sym):
        if var == "r":
            return Sym(e.name, e.dr + 1, e.dt)
        return Sym(e.name, e.dr, e.dt + 1)
    if isinstance(e, Add):
        return add(*(differentiate(t, var) for t in e.terms))
    if isinstance(e, Mul):
        pieces = []
        for i, f in enumerate(e.factors):
            rest = e.factors[:i] + e.factors[i + 1 :]
            pieces.append(mul(differentiate(f, var), *rest))
        return add(*pieces)
    if isinstance(e, Pow):
        return mul(Rat(e.exp), powx(e.base, e.exp - 1), differentiate(e.base, var))
    raise TypeError(type(e))


def evaluate(e: Expr, profile: "Profile", r: float, t: float) -> float:
    """Evaluate at a point, pulling symbol values from the profile."""
    if isinstance(e, Rat):
        return float(e.value)
    if isinstance(e, Sym):
        return profile.partial(e.name, e.dr, e.dt, r, t)
    if isinstance(e, Add):
        return math.fsum(evaluate(t_, profile, r, t) for t_ in e.terms)
    if isinstance(e, Mul):
        out = 1.0
        for f in e.factors:
            out *= evaluate(f, profile, r, t)
        return out
    if isinstance(e, Pow):
        b = evaluate(e.base, profile, r, t)
        if e.exp.denominator != 1:
            if b < 0:
                raise EvaluationError(f"negative radicand {b!r} in {to_str(e)}")
            return b ** float(e.exp)
        if b == 0 and e.exp < 0:
            raise EvaluationError(f"division by zero in {to_str(e)}")
        return b ** int(e.exp)
    raise TypeError(type(e))


def symbols_in(e: Expr) -> set:
    """All (name, dr, dt) triples appearing in the expression."""
    if isinstance(e, Sym):
        return {(e.name, e.dr, e.dt)}
    if isinstance(e, Add):
        return set().union(*(symbols_in(t) for t in e.terms)) if e.terms else set()
    if isinstance(e, Mul):
        return set().union(*(symbols_in(f) for f in e.factors)) if e.factors else set()
    if isinstance(e, Pow):
        return symbols_in(e.base)
    return set()


def numerically_equal(
    e1: Expr, e2: Expr, rng, n_points: int = 20, tol: float = 1e-9
) -> bool:
    """Equality fallback: compare at random positive-profile points.

    Samples A, B log-uniform in (0.1, 10) and every derivative symbol from
    a unit normal, as the canonical simplifier is not a full CAS.
    """
    from .exterior import PointProfile

    needed = symbols_in(e1) | symbols_in(e2)
    for _ in range(n_points):
        values = {}
        for name in SYMBOL_NAMES:
            values[(name, 0, 0)] = float(10.0 ** rng.uniform(-1, 1))
        for key in needed:
            if key not in values:
                values[key] = float(rng.normal())
        p = PointProfile(values)
        v1 = evaluate(e1, p, 2.0, 0.0)
        v2 = evaluate(e2, p, 2.0, 0.0)
        if abs(v1 - v2) > tol * max(1.0, abs(v1), abs(v2)):
            return False
    return True


def to_str(e: Expr) -> str:
    """Compact human-readable rendering (A', B'' for r-partials, A_t for
    t-partials)."""
    if isinstance(e, Rat):
        return str(e.value)
    if isinstance(e, Sym):
        return e.name + "'" * e.dr + "_" + "t" * e.dt if e.dt else e.name + "'" * e.dr
    if isinstance(e, Add):
        return "(" + " + ".join(to_str(t) for t in e.terms) + ")"
    if isinstance(e, Mul):
        return "*".join(_paren(f) for f in e.factors)
    if isinstance(e, Pow):
        return f"{_paren(e.base)}^({e.exp})"
    raise TypeError(type(e))


def _paren(e: Expr) -> str:
    s = to_str(e)
    if isinstance(e, (Add,)) or (isinstance(e, Rat) and e.value < 0):
        return f"({s})" if not s.startswith("(") else s
    return s
