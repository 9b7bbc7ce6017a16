# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 advancer for batches of mean-field coupled phase oscillators."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport fabs, fmod, isfinite
from libc.stdlib cimport malloc, free

cdef extern from "math.h" nogil:
    void sincos(double x, double* s, double* c)

cnp.import_array()

cdef double TWO_PI = 6.283185307179586


cdef inline double _wrap(double x) noexcept nogil:
    if x >= TWO_PI:
        x -= TWO_PI
    elif x < 0.0:
        x += TWO_PI
    if x < 0.0 or x >= TWO_PI:
        x = fmod(x, TWO_PI)
        if x < 0.0:
            x += TWO_PI
        if x >= TWO_PI:
            x = 0.0
    return x


cdef double SMALL_ANGLE = 0.2


cdef double R6 = 1.0 / 6.0, R20 = 1.0 / 20.0, R42 = 1.0 / 42.0, R72 = 1.0 / 72.0, R110 = 1.0 / 110.0
cdef double R2 = 0.5, R12 = 1.0 / 12.0, R30 = 1.0 / 30.0, R56 = 1.0 / 56.0, R90 = 1.0 / 90.0, R132 = 1.0 / 132.0


cdef inline void _sincos_small(double d, double* sd, double* cd) noexcept nogil:
    """sin/cos of |d| <= SMALL_ANGLE by truncated Taylor series (error < 1e-18)."""
    cdef double d2 = d * d
    sd[0] = d * (1.0 - d2 * R6 * (1.0 - d2 * R20 * (1.0 - d2 * R42 * (1.0 - d2 * R72 * (1.0 - d2 * R110)))))
    cd[0] = 1.0 - d2 * R2 * (1.0 - d2 * R12 * (1.0 - d2 * R30 * (1.0 - d2 * R56 * (1.0 - d2 * R90 * (1.0 - d2 * R132)))))


cdef inline double _field(const double* cs, const double* sn, const double* om, double k, double v,
                          bint active, Py_ssize_t n, double amp, double tau_rise, double tau_leak,
                          double* dth) noexcept nogil:
    """Fill dth from the phasors (cs, sn) and return the detector derivative."""
    cdef Py_ssize_t j
    cdef double zc = 0.0, zs = 0.0, va, drive, inv_n = 1.0 / n
    for j in range(n):
        zc = zc + cs[j]
        zs = zs + sn[j]
    zc = zc * inv_n
    zs = zs * inv_n
    for j in range(n):
        dth[j] = om[j] + k * (zs * cs[j] - zc * sn[j])
    if not active:
        return 0.0
    va = fabs(amp * zc)
    drive = va - v
    if drive < 0.0:
        drive = 0.0
    return drive / tau_rise - v / tau_leak


cdef inline void _shifted(const double* th, const double* c0, const double* s0, const double* kk,
                          double a, Py_ssize_t n, double* cs, double* sn) noexcept nogil:
    """Phasors of th + a*kk, rotated from the exact phasors (c0, s0) of th."""
    cdef Py_ssize_t j
    cdef double d, sd, cd
    for j in range(n):
        d = a * kk[j]
        if fabs(d) <= SMALL_ANGLE:
            _sincos_small(d, &sd, &cd)
            cs[j] = c0[j] * cd - s0[j] * sd
            sn[j] = s0[j] * cd + c0[j] * sd
        else:
            sincos(th[j] + d, &sn[j], &cs[j])


cdef Py_ssize_t _advance_row(double* th, const double* om, double k, double* vpd,
                             Py_ssize_t n, double dt, long step0, long nsteps, long n_del,
                             double amp, double tau_rise, double tau_leak,
                             double* work) noexcept nogil:
    cdef double* k1 = work
    cdef double* k2 = work + n
    cdef double* k3 = work + 2 * n
    cdef double* k4 = work + 3 * n
    cdef double* c0 = work + 4 * n
    cdef double* s0 = work + 5 * n
    cdef double* cs = work + 6 * n
    cdef double* sn = work + 7 * n
    cdef double v = vpd[0], d1, d2, d3, d4, h2 = 0.5 * dt, h6 = dt / 6.0
    cdef long s, step
    cdef Py_ssize_t j
    cdef bint active
    for s in range(nsteps):
        step = step0 + s
        active = step >= n_del
        for j in range(n):
            sincos(th[j], &s0[j], &c0[j])
        d1 = _field(c0, s0, om, k, v, active, n, amp, tau_rise, tau_leak, k1)
        _shifted(th, c0, s0, k1, h2, n, cs, sn)
        d2 = _field(cs, sn, om, k, v + h2 * d1, active, n, amp, tau_rise, tau_leak, k2)
        _shifted(th, c0, s0, k2, h2, n, cs, sn)
        d3 = _field(cs, sn, om, k, v + h2 * d2, active, n, amp, tau_rise, tau_leak, k3)
        _shifted(th, c0, s0, k3, dt, n, cs, sn)
        d4 = _field(cs, sn, om, k, v + dt * d3, active, n, amp, tau_rise, tau_leak, k4)
        for j in range(n):
            th[j] = th[j] + h6 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            if not isfinite(th[j]):
                vpd[0] = v
                return step
            th[j] = _wrap(th[j])
        if step + 1 <= n_del:
            v = 0.0
        else:
            v = v + h6 * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
            if v < 0.0:
                v = 0.0
    vpd[0] = v
    return -1


def advance(double[:, ::1] theta, const double[:, ::1] omega, const double[::1] coupling,
            double[::1] vpd, double dt, long step0, long nsteps, long n_del,
            double amplitude, double tau_rise, double tau_leak, int threads=1):
    """Advance every row of ``theta``/``vpd`` in place by ``nsteps`` RK4 steps.

    Returns an int64 array holding, per row, the step index at which a
    non-finite phase appeared, or -1.
    """
    cdef Py_ssize_t b = theta.shape[0], n = theta.shape[1], i
    bad_arr = np.full(b, -1, dtype=np.int64)
    cdef long[::1] bad = bad_arr
    cdef double* work
    if b == 0 or nsteps <= 0:
        return bad_arr
    if threads < 1:
        threads = 1
    with nogil:
        for i in prange(b, num_threads=threads, schedule="static"):
            work = <double*> malloc(8 * n * sizeof(double))
            bad[i] = _advance_row(&theta[i, 0], &omega[i, 0], coupling[i], &vpd[i], n, dt,
                                  step0, nsteps, n_del, amplitude, tau_rise, tau_leak, work)
            free(work)
    return bad_arr
