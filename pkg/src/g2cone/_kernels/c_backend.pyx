# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend: same algorithms as py_backend, C scalar loops."""

from libc.math cimport sqrt, fabs

import numpy as np

BACKEND = "cython"

cdef double SQRT12 = sqrt(12.0)

cdef int MAX_DEPTH = 52

# Gauss-Legendre nodes/weights (numpy.polynomial.legendre.leggauss values).
cdef double[7] GL7_X
cdef double[7] GL7_W
cdef double[15] GL15_X
cdef double[15] GL15_W

GL7_X[0] = -0.9491079123427585; GL7_X[1] = -0.7415311855993945
GL7_X[2] = -0.4058451513773972; GL7_X[3] = 0.0
GL7_X[4] = 0.4058451513773972;  GL7_X[5] = 0.7415311855993945
GL7_X[6] = 0.9491079123427585
GL7_W[0] = 0.12948496616887065; GL7_W[1] = 0.2797053914892766
GL7_W[2] = 0.3818300505051183;  GL7_W[3] = 0.41795918367346896
GL7_W[4] = 0.3818300505051183;  GL7_W[5] = 0.2797053914892766
GL7_W[6] = 0.12948496616887065

GL15_X[0] = -0.9879925180204854;  GL15_X[1] = -0.937273392400706
GL15_X[2] = -0.8482065834104272;  GL15_X[3] = -0.7244177313601701
GL15_X[4] = -0.5709721726085388;  GL15_X[5] = -0.3941513470775634
GL15_X[6] = -0.20119409399743451; GL15_X[7] = 0.0
GL15_X[8] = 0.20119409399743451;  GL15_X[9] = 0.3941513470775634
GL15_X[10] = 0.5709721726085388;  GL15_X[11] = 0.7244177313601701
GL15_X[12] = 0.8482065834104272;  GL15_X[13] = 0.937273392400706
GL15_X[14] = 0.9879925180204854
GL15_W[0] = 0.030753241996118647; GL15_W[1] = 0.07036604748810807
GL15_W[2] = 0.10715922046717177;  GL15_W[3] = 0.1395706779261539
GL15_W[4] = 0.16626920581699378;  GL15_W[5] = 0.18616100001556188
GL15_W[6] = 0.19843148532711125;  GL15_W[7] = 0.2025782419255609
GL15_W[8] = 0.19843148532711125;  GL15_W[9] = 0.18616100001556188
GL15_W[10] = 0.16626920581699378; GL15_W[11] = 0.1395706779261539
GL15_W[12] = 0.10715922046717177; GL15_W[13] = 0.07036604748810807
GL15_W[14] = 0.030753241996118647


class QuadratureError(RuntimeError):
    pass


cdef inline double integrand(int fun_id, double u, double f) nogil:
    cdef double u2 = u * u
    cdef double u6 = u2 * u2 * u2
    cdef double s = u6 / 12.0 + f
    if fun_id == 0:
        return 2.0 * u2 * u2 / sqrt(s)
    return -u2 * u2 / (s * sqrt(s))


cdef double gauss(int fun_id, double a, double b, double f, int order) nogil:
    cdef double mid = 0.5 * (a + b)
    cdef double half = 0.5 * (b - a)
    cdef double total = 0.0
    cdef int i
    if order == 7:
        for i in range(7):
            total += GL7_W[i] * integrand(fun_id, mid + half * GL7_X[i], f)
    else:
        for i in range(15):
            total += GL15_W[i] * integrand(fun_id, mid + half * GL15_X[i], f)
    return half * total


cdef double adaptive(int fun_id, double a, double b, double f, double rel_tol) except? -1.0:
    cdef double rough = gauss(fun_id, a, b, f, 15)
    cdef double tol_abs = rel_tol * fabs(rough)
    if tol_abs < 1e-300:
        tol_abs = 1e-300
    cdef double width = b - a
    cdef double total = 0.0
    # explicit stack: (lo, hi, depth)
    cdef double[3 * 256] stack
    cdef int top = 0
    cdef double lo, hi, i15, i7, err, local, mid
    cdef int depth
    stack[0] = a; stack[1] = b; stack[2] = 0.0
    top = 1
    while top > 0:
        top -= 1
        lo = stack[3 * top]; hi = stack[3 * top + 1]; depth = <int>stack[3 * top + 2]
        i15 = gauss(fun_id, lo, hi, f, 15)
        i7 = gauss(fun_id, lo, hi, f, 7)
        err = fabs(i15 - i7)
        local = tol_abs * (hi - lo) / width
        if err <= local or depth >= MAX_DEPTH or top >= 254:
            if err > 1e3 * local and (depth >= MAX_DEPTH or top >= 254):
                raise QuadratureError("adaptive quadrature failed to converge")
            total += i15
        else:
            mid = 0.5 * (lo + hi)
            stack[3 * top] = lo; stack[3 * top + 1] = mid; stack[3 * top + 2] = depth + 1
            top += 1
            stack[3 * top] = mid; stack[3 * top + 1] = hi; stack[3 * top + 2] = depth + 1
            top += 1
    return total


cpdef double quad_F(double Bv, double fv, double rel_tol=1e-10) except? -1.0:
    if fv < 0.0:
        raise ValueError("flow data requires f >= 0 (the profile integrand is undefined near 0 for negative f)")
    if Bv < 0.0:
        raise ValueError("B must be nonnegative")
    if Bv == 0.0:
        return 0.0
    if fv == 0.0:
        return SQRT12 * Bv
    return adaptive(0, 0.0, sqrt(Bv), fv, rel_tol)


cpdef double quad_dFdf(double Bv, double fv, double rel_tol=1e-10) except? -1.0:
    if fv <= 0.0:
        raise ValueError("dF/df needs f > 0")
    if Bv <= 0.0:
        return 0.0
    return adaptive(1, 0.0, sqrt(Bv), fv, rel_tol)


cpdef double solve_B(double target, double fv, double rel_tol=1e-10) except? -1.0:
    cdef double quad_tol, lo, hi, flo, fhi, mid, fmid, span
    cdef int i
    if fv < 0.0:
        raise ValueError("flow data requires f >= 0 (the profile integrand is undefined near 0 for negative f)")
    if target <= 0.0:
        raise ValueError("outside solution domain")
    if fv == 0.0:
        return target / SQRT12

    quad_tol = rel_tol if rel_tol < 1e-11 else 1e-11
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

    for i in range(200):
        if hi - lo <= rel_tol * hi:
            break
        if fhi != flo:
            mid = lo - flo * (hi - lo) / (fhi - flo)
        else:
            mid = 0.5 * (lo + hi)
        span = hi - lo
        if not (lo + 0.01 * span <= mid <= hi - 0.01 * span):
            mid = 0.5 * (lo + hi)
        fmid = quad_F(mid, fv, quad_tol) - target
        if fmid == 0.0:
            return mid
        if fmid < 0.0:
            lo = mid; flo = fmid
        else:
            hi = mid; fhi = fmid
    return 0.5 * (lo + hi)


def solve_B_many(targets, fvs, double rel_tol=1e-10):
    t = np.ascontiguousarray(targets, dtype=np.float64)
    f = np.ascontiguousarray(fvs, dtype=np.float64)
    out = np.empty_like(t)
    cdef double[::1] tv = t.ravel()
    cdef double[::1] fv = f.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i
    for i in range(tv.shape[0]):
        ov[i] = solve_B(tv[i], fv[i], rel_tol)
    return out


def rk4_characteristic(double B0, double A0, double x0, double x_end, int steps):
    cdef double h, B, A, f0, drift, f, q
    cdef double k1B, k1A, k2B, k2A, k3B, k3A, k4B, k4A, Bs, As
    cdef int i
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if B0 <= 0.0 or A0 <= 0.0:
        raise ValueError("degenerate metric on characteristic")
    h = (x_end - x0) / steps
    B = B0; A = A0
    f0 = A * A * B / 4.0 - B * B * B / 12.0
    drift = 0.0
    for i in range(steps):
        if B <= 0.0:
            raise ValueError("degenerate metric on characteristic")
        q = A / B
        k1B = A / (2.0 * B); k1A = 0.25 * (1.0 - q * q)

        Bs = B + 0.5 * h * k1B; As = A + 0.5 * h * k1A
        if Bs <= 0.0:
            raise ValueError("degenerate metric on characteristic")
        q = As / Bs
        k2B = As / (2.0 * Bs); k2A = 0.25 * (1.0 - q * q)

        Bs = B + 0.5 * h * k2B; As = A + 0.5 * h * k2A
        if Bs <= 0.0:
            raise ValueError("degenerate metric on characteristic")
        q = As / Bs
        k3B = As / (2.0 * Bs); k3A = 0.25 * (1.0 - q * q)

        Bs = B + h * k3B; As = A + h * k3A
        if Bs <= 0.0:
            raise ValueError("degenerate metric on characteristic")
        q = As / Bs
        k4B = As / (2.0 * Bs); k4A = 0.25 * (1.0 - q * q)

        B += h * (k1B + 2.0 * k2B + 2.0 * k3B + k4B) / 6.0
        A += h * (k1A + 2.0 * k2A + 2.0 * k3A + k4A) / 6.0
        if B <= 0.0:
            raise ValueError("degenerate metric on characteristic")
        f = A * A * B / 4.0 - B * B * B / 12.0
        if fabs(f - f0) > drift:
            drift = fabs(f - f0)
    return B, A, drift
