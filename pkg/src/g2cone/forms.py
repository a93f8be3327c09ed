"""Graded exterior algebra over a fixed 7-element coframe.

A :class:`KForm` stores a map from strictly increasing index tuples to
coefficients.  Coefficients are either symbolic (:class:`~.coeffs.Expr`)
or plain floats; the algebra (wedge, contraction, sums) is agnostic.
Index tuples are normalized on insertion: repeated indices drop the term,
out-of-order tuples contribute the permutation sign.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Mapping, Tuple, Union

from . import coeffs
from .coeffs import Expr, Rat

Index = Tuple[int, ...]
Coeff = Union[Expr, float]

DIM = 7


def sort_with_sign(indices: Iterable[int]):
    """Return (sign, increasing tuple), or (0, None) on a repeated index."""
    seq = list(indices)
    for i in seq:
        if not 1 <= i <= DIM:
            raise ValueError(f"coframe index {i} out of range 1..{DIM}")
    if len(set(seq)) != len(seq):
        return 0, None
    sign = 1
    for a in range(len(seq)):
        for b in range(a + 1, len(seq)):
            if seq[a] > seq[b]:
                sign = -sign
    return sign, tuple(sorted(seq))


def _coerce(c) -> Coeff:
    if isinstance(c, (Expr, float)):
        return c
    if isinstance(c, (int, Fraction)):
        return Rat(c)
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def _is_zero(c: Coeff) -> bool:
    if isinstance(c, Expr):
        return coeffs.is_zero(c)
    return c == 0.0


def _neg(c: Coeff) -> Coeff:
    return -c


class KForm:
    """Differential form of fixed degree on the 7-coframe."""

    __slots__ = ("degree", "terms")

    def __init__(self, degree: int, terms: Mapping[Index, Coeff] | None = None):
        if not 0 <= degree <= DIM:
            raise ValueError(f"degree must be in 0..{DIM}, got {degree}")
        clean: Dict[Index, Coeff] = {}
        for idx, c in (terms or {}).items():
            if len(idx) != degree:
                raise ValueError(f"index tuple {idx} has wrong length for degree {degree}")
            if list(idx) != sorted(set(idx)):
                raise ValueError(f"index tuple {idx} must be strictly increasing")
            c = _coerce(c)
            if not _is_zero(c):
                clean[idx] = c
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, *a):
        raise AttributeError("KForm is immutable")

    # -- construction -------------------------------------------------

    @classmethod
    def zero(cls, degree: int = 0) -> "KForm":
        return cls(degree, {})

    @classmethod
    def monomial(cls, indices: Iterable[int], coeff=1) -> "KForm":
        """Build c * e^I from indices in any order (sign-normalized)."""
        seq = tuple(indices)
        sign, idx = sort_with_sign(seq)
        if sign == 0:
            return cls.zero(len(seq))
        c = _coerce(coeff)
        if sign < 0:
            c = _neg(c)
        return cls(len(seq), {idx: c})

    @classmethod
    def constant(cls, value) -> "KForm":
        return cls(0, {(): _coerce(value)})

    # -- predicates ----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_numeric(self) -> bool:
        return all(isinstance(c, float) for c in self.terms.values())

    # -- linear structure ----------------------------------------------

    def __add__(self, other: "KForm") -> "KForm":
        if not isinstance(other, KForm):
            return NotImplemented
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.degree != other.degree:
            raise ValueError(f"cannot add forms of degree {self.degree} and {other.degree}")
        merged = dict(self.terms)
        for idx, c in other.terms.items():
            if idx in merged:
                merged[idx] = merged[idx] + c
            else:
                merged[idx] = c
        return KForm(self.degree, merged)

    def __sub__(self, other: "KForm") -> "KForm":
        return self + (-other)

    def __neg__(self) -> "KForm":
        return KForm(self.degree, {i: _neg(c) for i, c in self.terms.items()})

    def scaled(self, factor) -> "KForm":
        factor = _coerce(factor)
        if _is_zero(factor):
            return KForm.zero(self.degree)
        return KForm(self.degree, {i: factor * c for i, c in self.terms.items()})

    def __rmul__(self, factor):
        return self.scaled(factor)

    def __mul__(self, factor):
        return self.scaled(factor)

    # -- exterior algebra ------------------------------------------------

    def wedge(self, other: "KForm") -> "KForm":
        """Exterior product; degree overflow past 7 gives the zero form."""
        if not isinstance(other, KForm):
            raise TypeError("wedge expects a KForm")
        deg = self.degree + other.degree
        if deg > DIM:
            return KForm.zero(DIM)
        out: Dict[Index, Coeff] = {}
        for ia, ca in self.terms.items():
            for ib, cb in other.terms.items():
                sign, idx = sort_with_sign(ia + ib)
                if sign == 0:
                    continue
                c = ca * cb
                if sign < 0:
                    c = _neg(c)
                if idx in out:
                    out[idx] = out[idx] + c
                else:
                    out[idx] = c
        return KForm(deg, out)

    def __xor__(self, other: "KForm") -> "KForm":
        return self.wedge(other)

    def contract(self, v: int) -> "KForm":
        """Interior product with the dual frame vector of coframe index v."""
        if self.degree == 0:
            raise ValueError("cannot contract scalar")
        if not 1 <= v <= DIM:
            raise ValueError(f"coframe index {v} out of range 1..{DIM}")
        out: Dict[Index, Coeff] = {}
        for idx, c in self.terms.items():
            if v not in idx:
                continue
            pos = idx.index(v)
            rest = idx[:pos] + idx[pos + 1 :]
            cc = c if pos % 2 == 0 else _neg(c)
            if rest in out:
                out[rest] = out[rest] + cc
            else:
                out[rest] = cc
        return KForm(self.degree - 1, out)

    # -- coefficient access ----------------------------------------------

    def coefficient(self, indices: Iterable[int]) -> Coeff:
        """Coefficient of e^I for I in any order (sign applied); zero forms
        of the ambient coefficient kind return symbolic 0."""
        seq = tuple(indices)
        sign, idx = sort_with_sign(seq)
        if sign == 0:
            return coeffs.ZERO
        c = self.terms.get(idx)
        if c is None:
            return 0.0 if self.is_numeric() and self.terms else coeffs.ZERO
        return c if sign > 0 else _neg(c)

    def map_coeffs(self, fn) -> "KForm":
        return KForm(self.degree, {i: fn(c) for i, c in self.terms.items()})

    def max_abs_coeff(self) -> float:
        """Largest absolute coefficient of a numeric form (0.0 when empty)."""
        vals = list(self.terms.values())
        if not vals:
            return 0.0
        if not all(isinstance(c, float) for c in vals):
            raise TypeError("max_abs_coeff needs a numeric form; evaluate first")
        return max(abs(c) for c in vals)

    # -- comparison --------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, KForm):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return True
        return self.degree == other.degree and self.terms == other.terms

    __hash__ = None  # unhashable: forms carry dict state

    def isclose(self, other: "KForm", tol: float = 1e-12) -> bool:
        """Numeric comparison: max coefficient difference over both supports."""
        if self.degree != other.degree and not (self.is_zero() or other.is_zero()):
            return False
        return self.max_diff(other) <= tol

    def max_diff(self, other: "KForm") -> float:
        keys = set(self.terms) | set(other.terms)
        worst = 0.0
        for k in keys:
            a = self.terms.get(k, 0.0)
            b = other.terms.get(k, 0.0)
            if isinstance(a, Expr) or isinstance(b, Expr):
                raise TypeError("max_diff needs numeric forms")
            worst = max(worst, abs(a - b))
        return worst

    def __repr__(self):
        if self.is_zero():
            return f"KForm({self.degree}, 0)"
        bits = []
        for idx in sorted(self.terms):
            c = self.terms[idx]
            cs = coeffs.to_str(c) if isinstance(c, Expr) else repr(c)
            label = "1" if idx == () else "e" + "".join(str(i) for i in idx)
            bits.append(f"{cs}*{label}" if idx != () else cs)
        return f"KForm({self.degree}, " + " + ".join(bits) + ")"


def basis_1form(i: int) -> KForm:
    return KForm.monomial((i,))


def wedge(a: KForm, b: KForm) -> KForm:
    return a.wedge(b)


def wedge_all(*forms_: KForm) -> KForm:
    out = forms_[0]
    for f in forms_[1:]:
        out = out.wedge(f)
    return out


def contract(v: int, a: KForm) -> KForm:
    return a.contract(v)
