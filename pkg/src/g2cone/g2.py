"""Octonion products, the associative 3-form, metric-from-form, Hodge star
and torsion residuals."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Tuple, Union

import numpy as np

from . import coeffs, exterior
from .coeffs import Expr, Rat
from .forms import DIM, KForm, sort_with_sign

# Oriented quaternionic triples (i, j, k) with e_i e_j = e_k, read off the
# seven-term associative form e456 + e621 + e174 + e527 + e637 + e135 + e432.
ASSOCIATIVE_TRIPLES: Tuple[Tuple[int, int, int], ...] = (
    (4, 5, 6),
    (6, 2, 1),
    (1, 7, 4),
    (5, 2, 7),
    (6, 3, 7),
    (1, 3, 5),
    (4, 3, 2),
)

# Imaginary-unit products e_i e_j = sign * e_k, written out so that the
# octonion route to the associative form stays independent of the triple
# list above (the two literals cross-check each other in tests).
# _MUL[i-1][j-1] = (sign, k); diagonal entries (0, 0) mean e_i e_i = -1.
_MUL: Tuple[Tuple[Tuple[int, int], ...], ...] = (
    ((0, 0), (-1, 6), (+1, 5), (-1, 7), (-1, 3), (+1, 2), (+1, 4)),
    ((+1, 6), (0, 0), (-1, 4), (+1, 3), (-1, 7), (-1, 1), (+1, 5)),
    ((-1, 5), (+1, 4), (0, 0), (-1, 2), (+1, 1), (-1, 7), (+1, 6)),
    ((+1, 7), (-1, 3), (+1, 2), (0, 0), (+1, 6), (-1, 5), (-1, 1)),
    ((+1, 3), (+1, 7), (-1, 1), (-1, 6), (0, 0), (+1, 4), (-1, 2)),
    ((-1, 2), (+1, 1), (+1, 7), (+1, 5), (-1, 4), (0, 0), (-1, 3)),
    ((-1, 4), (-1, 5), (-1, 6), (+1, 1), (+1, 2), (+1, 3), (0, 0)),
)

_TOP = tuple(range(1, DIM + 1))

METRIC_NORMALIZATION = 6.0 ** (2.0 / 9.0)


class DegenerateStructureError(ValueError):
    """Raised when a 3-form fails the non-degeneracy test."""


class OrientationError(ValueError):
    """Raised when det(B) <= 0 under the fixed e^{1..7} orientation."""


class Octonion:
    """Element of the octonion algebra over basis (1, e_1, ..., e_7)."""

    __slots__ = ("components",)

    def __init__(self, components):
        arr = np.asarray(components, dtype=float)
        if arr.shape != (8,):
            raise ValueError("octonion needs 8 components (real, e1..e7)")
        object.__setattr__(self, "components", arr)

    def __setattr__(self, *a):
        raise AttributeError("Octonion is immutable")

    @classmethod
    def unit(cls, i: int) -> "Octonion":
        """Basis element: unit(0) is the real unit, unit(1..7) are e_i."""
        c = np.zeros(8)
        c[i] = 1.0
        return cls(c)

    @classmethod
    def imaginary(cls, vec) -> "Octonion":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (7,):
            raise ValueError("imaginary part needs 7 components")
        return cls(np.concatenate(([0.0], vec)))

    @property
    def real(self) -> float:
        return float(self.components[0])

    @property
    def imag(self) -> np.ndarray:
        return self.components[1:].copy()

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))

    def __add__(self, other):
        return Octonion(self.components + other.components)

    def __sub__(self, other):
        return Octonion(self.components - other.components)

    def __rmul__(self, scalar):
        if isinstance(scalar, (int, float)):
            return Octonion(scalar * self.components)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Octonion(other * self.components)
        if isinstance(other, Octonion):
            return octonion_mul(self, other)
        return NotImplemented

    def __repr__(self):
        return f"Octonion({self.components.tolist()})"


def octonion_mul(u: Octonion, v: Octonion) -> Octonion:
    """Product in the fixed multiplication table."""
    a, b = u.components, v.components
    out = np.zeros(8)
    out[0] = a[0] * b[0] - float(np.dot(a[1:], b[1:]))
    out[1:] += a[0] * b[1:] + b[0] * a[1:]
    for i in range(1, 8):
        ai = a[i]
        if ai == 0.0:
            continue
        row = _MUL[i - 1]
        for j in range(1, 8):
            bj = b[j]
            if bj == 0.0 or i == j:
                continue
            sign, k = row[j - 1]
            out[k] += sign * ai * bj
    return Octonion(out)


def _require_imaginary(u: Octonion, what: str):
    if abs(u.real) > 1e-12 * max(1.0, u.norm()):
        raise ValueError(f"{what} expects imaginary octonions")


def inner(u: Octonion, v: Octonion) -> float:
    """<u, v> = -Re(u o v) on imaginary octonions (Euclidean on e_1..e_7)."""
    _require_imaginary(u, "inner")
    _require_imaginary(v, "inner")
    return -octonion_mul(u, v).real


def cross(u: Octonion, v: Octonion) -> Octonion:
    """u x v = Im(u o v); antisymmetric and orthogonal to both arguments."""
    _require_imaginary(u, "cross")
    _require_imaginary(v, "cross")
    return Octonion.imaginary(octonion_mul(u, v).imag)


def associative_form() -> KForm:
    """The seven-term constant 3-form, sign-normalized to increasing tuples."""
    out = KForm.zero(3)
    for triple in ASSOCIATIVE_TRIPLES:
        out = out + KForm.monomial(triple, 1)
    return out


def phi_from_octonions() -> KForm:
    """Rebuild the associative form from phi(u, v, w) = <u x v, w>."""
    terms = {}
    for i in range(1, 8):
        for j in range(i + 1, 8):
            cij = cross(Octonion.unit(i), Octonion.unit(j))
            for k in range(j + 1, 8):
                c = inner(cij, Octonion.unit(k))
                if c != 0.0:
                    terms[(i, j, k)] = Rat(Fraction(c).limit_denominator(1))
    return KForm(3, terms)


def scaled_associative_form(scales: Sequence) -> KForm:
    """Associative form of the diagonally rescaled coframe e^i = s_i g^i.

    Scales may be numbers or symbolic coefficients; the cone family uses
    (A, A, A, B, B, B, 1).
    """
    if len(scales) != DIM:
        raise ValueError("need 7 scales")
    out_terms = {}
    for triple in ASSOCIATIVE_TRIPLES:
        sign, idx = sort_with_sign(triple)
        c = scales[idx[0] - 1] * scales[idx[1] - 1] * scales[idx[2] - 1]
        if sign < 0:
            c = -c
        out_terms[idx] = c
    return KForm(3, out_terms)


@dataclass(frozen=True)
class MetricDiag:
    """Diagonal metric components in the fixed coframe."""

    components: Tuple[float, float, float, float, float, float, float]

    def __post_init__(self):
        if len(self.components) != DIM:
            raise ValueError("need 7 diagonal components")
        if any(c <= 0 for c in self.components):
            raise ValueError("metric components must be positive")

    @classmethod
    def identity(cls) -> "MetricDiag":
        return cls((1.0,) * DIM)

    @classmethod
    def from_cone(cls, A: float, B: float) -> "MetricDiag":
        """diag(A^2 x3, B^2 x3, 1): the metric paired with the cone 3-form."""
        return cls((A * A, A * A, A * A, B * B, B * B, B * B, 1.0))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.components, dtype=float)


def b_tensor(phi: KForm) -> np.ndarray:
    """B_ij defined by B_ij e^{1..7} = (d_i . phi) ^ (d_j . phi) ^ phi."""
    if phi.degree != 3:
        raise ValueError("b_tensor needs a 3-form")
    if not (phi.is_numeric() or phi.is_zero()):
        raise TypeError("b_tensor needs a numeric form; evaluate first")
    contractions = [phi.contract(i) for i in range(1, 8)]
    out = np.zeros((7, 7))
    for i in range(7):
        for j in range(i, 7):
            w = contractions[i].wedge(contractions[j]).wedge(phi)
            c = w.terms.get(_TOP, 0.0)
            out[i, j] = out[j, i] = c
    return out


def nondegenerate(phi: KForm, threshold: float = 1e-9) -> bool:
    """Non-degeneracy of a numeric 3-form: the B tensor is definite up to
    sign, judged by an eigenvalue threshold relative to its largest entry."""
    b = b_tensor(phi)
    scale = float(np.max(np.abs(b)))
    if scale == 0.0:
        return False
    eigs = np.linalg.eigvalsh(b)
    return bool(np.all(eigs > threshold * scale) or np.all(eigs < -threshold * scale))


def metric_from_phi(
    phi: KForm,
    profile: exterior.Profile | None = None,
    r: float = 0.0,
    t: float = 0.0,
) -> np.ndarray:
    """Full symmetric metric induced by a non-degenerate 3-form.

    g_ij = B_ij / (6^(2/9) det(B)^(1/9)) with the orientation e^{1..7}.
    Symbolic forms are evaluated through the profile first.
    """
    if not phi.is_numeric() and not phi.is_zero():
        if profile is None:
            raise ValueError("symbolic form needs a profile to evaluate")
        phi = exterior.eval_form(phi, profile, r, t)
    if not nondegenerate(phi):
        raise DegenerateStructureError("degenerate G2-structure")
    b = b_tensor(phi)
    det = float(np.linalg.det(b))
    if det <= 0.0:
        raise OrientationError("orientation mismatch: det(B) <= 0 under e^{1..7}")
    return b / (METRIC_NORMALIZATION * det ** (1.0 / 9.0))


def _complement(idx: Tuple[int, ...]) -> Tuple[int, ...]:
    return tuple(i for i in _TOP if i not in idx)


def hodge_star(form: KForm, metric: Union[MetricDiag, Sequence]) -> KForm:
    """Hodge star for a diagonal metric; works coefficient-wise for both
    numeric and symbolic forms.  Star of e^I is

        sign(I, I^c) * sqrt(det g) * prod_{i in I} g_ii^{-1} * e^{I^c}

    and ** = identity on all degrees (odd dimension, Riemannian)."""
    if isinstance(metric, MetricDiag):
        entries = list(metric.components)
        sqrt_det = math.sqrt(math.prod(entries))
        invert = lambda x: 1.0 / x
    else:
        entries = [coeffs.as_expr(c) if not isinstance(c, Expr) else c for c in metric]
        if len(entries) != DIM:
            raise ValueError("need 7 metric components")
        prod = entries[0]
        for c in entries[1:]:
            prod = prod * c
        sqrt_det = coeffs.powx(prod, Fraction(1, 2))
        invert = lambda x: coeffs.powx(x, Fraction(-1))

    out = {}
    for idx, c in form.terms.items():
        comp = _complement(idx)
        sign, _ = sort_with_sign(idx + comp)
        w = c * sqrt_det
        for i in idx:
            w = w * invert(entries[i - 1])
        if sign < 0:
            w = -w
        out[comp] = w if comp not in out else out[comp] + w
    return KForm(DIM - form.degree, out)


def codifferential(form: KForm, metric: Sequence) -> KForm:
    """delta = (-1)^k * d * on symbolic k-forms (dimension 7); only the
    magnitude of the result is consumed by the torsion diagnostics."""
    k = form.degree
    candidate = hodge_star(exterior.d(hodge_star(form, metric)), metric)
    return candidate if k % 2 == 0 else -candidate


def cone_metric_symbolic() -> Tuple[Expr, ...]:
    """Diagonal entries (A^2 x3, B^2 x3, 1) as symbolic coefficients."""
    a2 = coeffs.powx(coeffs.A, 2)
    b2 = coeffs.powx(coeffs.B, 2)
    return (a2, a2, a2, b2, b2, b2, coeffs.ONE)


def cone_scales_numeric(profile: exterior.Profile, r: float, t: float):
    A = profile.A(r, t)
    B = profile.B(r, t)
    return (A, A, A, B, B, B, 1.0)


def to_scaled_basis(form: KForm, scales: Sequence[float]) -> KForm:
    """Convert coframe-basis coefficients to the rescaled e-basis (divide
    each term by the product of its slots' scales)."""
    out = {}
    for idx, c in form.terms.items():
        denom = 1.0
        for i in idx:
            denom *= scales[i - 1]
        out[idx] = c / denom
    return KForm(form.degree, out)


def torsion_residuals(profile: exterior.Profile, r: float, t: float) -> Tuple[float, float]:
    """(max |dphi| coefficient, max |delta phi| coefficient) at (r, t).

    Both are reported in the rescaled e-basis, where the torsion-free
    conditions read A/B^2 = B'/B and B'/B + 2A'/A = 1/A.
    """
    from .flow import cone_phi  # local: flow builds on this module

    phi = cone_phi()
    metric = cone_metric_symbolic()
    scales = cone_scales_numeric(profile, r, t)

    dphi = exterior.eval_form(exterior.d(phi), profile, r, t)
    dphi_res = to_scaled_basis(dphi, scales).max_abs_coeff()

    delta = exterior.eval_form(codifferential(phi, metric), profile, r, t)
    delta_res = to_scaled_basis(delta, scales).max_abs_coeff()
    return dphi_res, delta_res
