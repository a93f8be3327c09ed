"""Pure-Python kernel backend.

Scalar hot loops for the flow solver: the profile integral

    F(B; f) = int_0^B db / sqrt(1/12 + f/b^3)

(after the cusp-smoothing substitution b = u^2), its f-derivative, the
bracketed monotone root solve F(B; f) = target, and the classical RK4
characteristic integrator.  The compiled backend in c_backend.pyx mirrors
these algorithms; this module is the import-time fallback and the
reference for backend-agreement tests.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

SQRT12 = math.sqrt(12.0)

def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return tuple(float(v) for v in x), tuple(float(v) for v in w)


_GL7_X, _GL7_W = _leggauss(7)
_GL15_X, _GL15_W = _leggauss(15)

_MAX_DEPTH = 52


class QuadratureError(RuntimeError):
    pass


def _integrand_F(u: float, f: float) -> float:
    # After b = u^2: 2 u^4 / sqrt(u^6/12 + f); smooth on [0, sqrt(B)] for f > 0.
    u2 = u * u
    u6 = u2 * u2 * u2
    return 2.0 * u2 * u2 / math.sqrt(u6 / 12.0 + f)


def _integrand_dFdf(u: float, f: float) -> float:
    # d/df of the F integrand: -u^4 (u^6/12 + f)^(-3/2).
    u2 = u * u
    u6 = u2 * u2 * u2
    s = u6 / 12.0 + f
    return -u2 * u2 / (s * math.sqrt(s))


def _gauss(fun, a: float, b: float, f: float, nodes, weights) -> float:
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    total = 0.0
    for x, w in zip(nodes, weights):
        total += w * fun(mid + half * x, f)
    return half * total


def _adaptive(fun, a: float, b: float, f: float, rel_tol: float) -> float:
    rough = _gauss(fun, a, b, f, _GL15_X, _GL15_W)
    tol_abs = max(rel_tol * abs(rough), 1e-300)
    width = b - a
    total = 0.0
    stack = [(a, b, 0)]
    while stack:
        lo, hi, depth = stack.pop()
        i15 = _gauss(fun, lo, hi, f, _GL15_X, _GL15_W)
        i7 = _gauss(fun, lo, hi, f, _GL7_X, _GL7_W)
        err = abs(i15 - i7)
        local = tol_abs * (hi - lo) / width
        if err <= local or depth >= _MAX_DEPTH:
            if depth >= _MAX_DEPTH and err > 1e3 * local:
                raise QuadratureError("adaptive quadrature failed to converge")
            total += i15
        else:
            mid = 0.5 * (lo + hi)
            stack.append((lo, mid, depth + 1))
            stack.append((mid, hi, depth + 1))
    return total


def quad_F(Bv: float, fv: float, rel_tol: float = 1e-10) -> float:
    """F(B; f); exact sqrt(12)*B branch for f = 0, quadrature otherwise."""
    if fv < 0.0:
        raise ValueError("flow data requires f >= 0 (the profile integrand is undefined near 0 for negative f)")
    if Bv < 0.0:
        raise ValueError("B must be nonnegative")
    if Bv == 0.0:
        return 0.0
    if fv == 0.0:
        return SQRT12 * Bv
    return _adaptive(_integrand_F, 0.0, math.sqrt(Bv), fv, rel_tol)


def quad_dFdf(Bv: float, fv: float, rel_tol: float = 1e-10) -> float:
    """dF/df at (B, f); only defined for f > 0 (divergent as f -> 0+)."""
    if fv <= 0.0:
        raise ValueError("dF/df needs f > 0")
    if Bv <= 0.0:
        return 0.0
    return _adaptive(_integrand_dFdf, 0.0, math.sqrt(Bv), fv, rel_tol)


def solve_B(target: float, fv: float, rel_tol: float = 1e-10) -> float:
    """Unique B > 0 with F(B; f) = target, by bracketed secant/bisection.

    The analytic lower bracket target/sqrt(12) comes from F(B) <= sqrt(12) B;
    the upper bracket is grown geometrically.  F is strictly increasing, so
    the bracket never fails.
    """
    if fv < 0.0:
        raise ValueError("flow data requires f >= 0 (the profile integrand is undefined near 0 for negative f)")
    if target <= 0.0:
        raise ValueError("outside solution domain")
    if fv == 0.0:
        return target / SQRT12

    quad_tol = min(rel_tol, 1e-11)
    lo = target / SQRT12
    flo = quad_F(lo, fv, quad_tol) - target
    if flo == 0.0:
        return lo
    hi = lo
    fhi = flo
    while fhi < 0.0:
        hi *= 2.0
        fhi = quad_F(hi, fv, quad_tol) - target
        if hi > 1e300:
            raise RuntimeError("upper bracket growth failed")

    for _ in range(200):
        if hi - lo <= rel_tol * hi:
            break
        if fhi != flo:
            mid = lo - flo * (hi - lo) / (fhi - flo)
        else:
            mid = 0.5 * (lo + hi)
        # keep the step safely interior, else bisect
        span = hi - lo
        if not (lo + 0.01 * span <= mid <= hi - 0.01 * span):
            mid = 0.5 * (lo + hi)
        fmid = quad_F(mid, fv, quad_tol) - target
        if fmid == 0.0:
            return mid
        if fmid < 0.0:
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
    return 0.5 * (lo + hi)


def solve_B_many(targets, fvs, rel_tol: float = 1e-10) -> np.ndarray:
    targets = np.asarray(targets, dtype=float)
    fvs = np.asarray(fvs, dtype=float)
    out = np.empty_like(targets)
    for i in range(targets.size):
        out.flat[i] = solve_B(float(targets.flat[i]), float(fvs.flat[i]), rel_tol)
    return out


def rk4_characteristic(B0: float, A0: float, x0: float, x_end: float, steps: int):
    """Classical RK4 on dB/dx = A/(2B), dA/dx = (1 - A^2/B^2)/4.

    Returns (B, A, max |f - f0|) with f = A^2 B/4 - B^3/12, the first
    integral of the characteristic system.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if B0 <= 0.0 or A0 <= 0.0:
        raise ValueError("degenerate metric on characteristic")
    h = (x_end - x0) / steps
    B, A = B0, A0
    f0 = A * A * B / 4.0 - B * B * B / 12.0
    drift = 0.0

    def rhs(Bc, Ac):
        if Bc <= 0.0:
            raise ValueError("degenerate metric on characteristic")
        q = Ac / Bc
        return Ac / (2.0 * Bc), 0.25 * (1.0 - q * q)

    for _ in range(steps):
        k1B, k1A = rhs(B, A)
        k2B, k2A = rhs(B + 0.5 * h * k1B, A + 0.5 * h * k1A)
        k3B, k3A = rhs(B + 0.5 * h * k2B, A + 0.5 * h * k2A)
        k4B, k4A = rhs(B + h * k3B, A + h * k3A)
        B += h * (k1B + 2.0 * k2B + 2.0 * k3B + k4B) / 6.0
        A += h * (k1A + 2.0 * k2A + 2.0 * k3A + k4A) / 6.0
        if B <= 0.0:
            raise ValueError("degenerate metric on characteristic")
        f = A * A * B / 4.0 - B * B * B / 12.0
        drift = max(drift, abs(f - f0))
    return B, A, drift
