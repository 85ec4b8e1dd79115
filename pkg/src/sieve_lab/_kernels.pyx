# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernels.

Draw-for-draw mirror of ``_fallback.py``; see that module for the contract.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport exp, expm1, log, log1p, nextafter, pow, INFINITY
from libc.stdint cimport int64_t
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    binomial_t,
    random_binomial,
    random_poisson,
    random_standard_exponential,
    random_standard_gamma,
    random_standard_uniform,
)
from scipy.special.cython_special cimport betainc, betaincc, betainccinv, betaincinv

cnp.import_array()

BACKEND = "cython"

cdef double LN2 = log(2.0)

cdef enum:
    HEAVY = 1


cdef struct LawC:
    int kind
    int ncomp
    const double *cumw
    const double *alpha
    const double *beta
    double tail_index
    const double *gu
    const double *gr
    Py_ssize_t ngrid
    double *surv


cdef bitgen_t *_bitgen(object rng) except NULL:
    capsule = rng.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("invalid bit generator capsule")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef class _LawHolder:
    # keeps the contiguous arrays alive while the C struct points into them
    cdef double[::1] cumw, alpha, beta, gu, gr, surv
    cdef LawC c

    def __init__(self, law):
        self.cumw = np.ascontiguousarray(law.cumw, dtype=np.float64)
        self.alpha = np.ascontiguousarray(law.alpha, dtype=np.float64)
        self.beta = np.ascontiguousarray(law.beta, dtype=np.float64)
        gu = law.grid_u if law.grid_u is not None else np.zeros(2)
        gr = law.grid_r if law.grid_r is not None else np.zeros(2)
        self.gu = np.ascontiguousarray(gu, dtype=np.float64)
        self.gr = np.ascontiguousarray(gr, dtype=np.float64)
        self.surv = np.zeros(len(self.cumw), dtype=np.float64)
        self.c.kind = law.kind
        self.c.ncomp = len(self.cumw)
        self.c.cumw = &self.cumw[0]
        self.c.alpha = &self.alpha[0]
        self.c.beta = &self.beta[0]
        self.c.tail_index = law.tail_index
        self.c.gu = &self.gu[0]
        self.c.gr = &self.gr[0]
        self.c.ngrid = len(self.gu)
        self.c.surv = &self.surv[0]


cdef inline int _pick(LawC *law, bitgen_t *bg) noexcept nogil:
    cdef int c, last
    cdef double u
    if law.ncomp == 1:
        return 0
    u = random_standard_uniform(bg)
    last = law.ncomp - 1
    for c in range(last):
        if u < law.cumw[c]:
            return c
    return last


cdef void _draw_w(LawC *law, bitgen_t *bg, double *w, double *q, double *spacing) noexcept nogil:
    cdef double z, x, y, s, a, b
    cdef int c
    if law.kind == HEAVY:
        z = exp(random_standard_exponential(bg) / law.tail_index)
        q[0] = exp(-z)
        w[0] = -expm1(-z)
        spacing[0] = -log1p(-q[0])
        return
    c = _pick(law, bg)
    a = law.alpha[c]
    b = law.beta[c]
    while True:
        x = random_standard_gamma(bg, a)
        y = random_standard_gamma(bg, b)
        if x > 0.0 and y > 0.0:
            break
    s = x + y
    w[0] = x / s
    q[0] = y / s
    spacing[0] = log1p(y / x)


cdef inline double _draw_spacing(LawC *law, bitgen_t *bg) noexcept nogil:
    cdef double w, q, spacing
    _draw_w(law, bg, &w, &q, &spacing)
    return spacing


cdef double _heavy_survival(double tail_index, double r) noexcept nogil:
    cdef double z = -log(-expm1(-r))
    if z <= 1.0:
        return 0.0
    return 1.0 - pow(z, -tail_index)


cdef double _draw_tail(LawC *law, double r, bitgen_t *bg) noexcept nogil:
    cdef double t, z, out, q0, total, prev, weight, s, v, acc
    cdef int c, j
    if law.kind == HEAVY:
        t = random_standard_uniform(bg) * _heavy_survival(law.tail_index, r)
        z = pow(1.0 - t, -1.0 / law.tail_index)
        out = -log1p(-exp(-z))
    else:
        q0 = -expm1(-r)
        total = 0.0
        prev = 0.0
        for c in range(law.ncomp):
            weight = law.cumw[c] - prev
            prev = law.cumw[c]
            if r > LN2:
                s = betainc(law.alpha[c], law.beta[c], exp(-r))
            else:
                s = betaincc(law.beta[c], law.alpha[c], q0)
            law.surv[c] = s
            total += weight * s
        c = 0
        if law.ncomp > 1:
            v = random_standard_uniform(bg) * total
            acc = 0.0
            prev = 0.0
            c = law.ncomp - 1
            for j in range(law.ncomp - 1):
                acc += (law.cumw[j] - prev) * law.surv[j]
                prev = law.cumw[j]
                if v < acc:
                    c = j
                    break
        t = random_standard_uniform(bg) * law.surv[c]
        if t < 0.5:
            out = -log(betaincinv(law.alpha[c], law.beta[c], t))
        else:
            out = -log1p(-betainccinv(law.beta[c], law.alpha[c], t))
    if not out > r:
        out = nextafter(r, INFINITY)
    return out


cdef double _draw_straddle(LawC *law, double r, int64_t attempts, bitgen_t *bg) noexcept nogil:
    cdef int64_t k
    cdef double spacing
    for k in range(attempts):
        spacing = _draw_spacing(law, bg)
        if spacing > r:
            return spacing
    return _draw_tail(law, r, bg)


cdef double _draw_forward(LawC *law, bitgen_t *bg) noexcept nogil:
    cdef double u = random_standard_uniform(bg)
    cdef Py_ssize_t lo = 0, hi = law.ngrid, mid, i
    # bisect_right
    while lo < hi:
        mid = (lo + hi) // 2
        if u < law.gu[mid]:
            hi = mid
        else:
            lo = mid + 1
    i = lo - 1
    if i >= law.ngrid - 1:
        return law.gr[law.ngrid - 1]
    return law.gr[i] + (u - law.gu[i]) * (law.gr[i + 1] - law.gr[i]) / (
        law.gu[i + 1] - law.gu[i]
    )


def sieve_chains(law, int64_t n, Py_ssize_t reps, rng):
    cdef _LawHolder holder = _LawHolder(law)
    cdef LawC *lc = &holder.c
    cdef bitgen_t *bg = _bitgen(rng)
    cdef binomial_t binom
    lengths_arr = np.empty(reps, dtype=np.int64)
    cdef int64_t[::1] lengths = lengths_arr
    cdef Py_ssize_t cap = max(16, reps * 8), used = 0, i
    buf_arr = np.empty(cap, dtype=np.int64)
    cdef int64_t[::1] buf = buf_arr
    cdef int64_t m, k, c
    cdef double w, q, spacing
    binom.has_binomial = 0
    with rng.bit_generator.lock:
        for i in range(reps):
            m = n
            k = 0
            while m > 0:
                _draw_w(lc, bg, &w, &q, &spacing)
                c = random_binomial(bg, q, m, &binom)
                if used == cap:
                    cap *= 2
                    buf_arr = np.resize(buf_arr, cap)
                    buf = buf_arr
                buf[used] = c
                used += 1
                m -= c
                k += 1
            lengths[i] = k
    return buf_arr[:used].copy(), lengths_arr


def limit_z(law, Py_ssize_t depth, Py_ssize_t reps, int64_t attempts, rng):
    cdef _LawHolder holder = _LawHolder(law)
    cdef LawC *lc = &holder.c
    cdef bitgen_t *bg = _bitgen(rng)
    out_arr = np.zeros((reps, depth), dtype=np.int64)
    cdef int64_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double y, r, spacing, left, length
    with rng.bit_generator.lock, nogil:
        for i in range(reps):
            y = random_standard_exponential(bg)
            r = _draw_forward(lc, bg)
            spacing = _draw_straddle(lc, r, attempts, bg)
            out[i, 0] = 1 + random_poisson(bg, y * expm1(spacing - r))
            left = y * exp(spacing - r)
            for j in range(1, depth):
                spacing = _draw_spacing(lc, bg)
                length = left * expm1(spacing)
                out[i, j] = random_poisson(bg, length)
                left += length
    return out_arr


def limit_kr(law, Py_ssize_t r_max, Py_ssize_t reps, int64_t consecutive,
             double factor, int64_t gap_budget, int64_t attempts, rng):
    cdef _LawHolder holder = _LawHolder(law)
    cdef LawC *lc = &holder.c
    cdef bitgen_t *bg = _bitgen(rng)
    counts_arr = np.zeros((reps, r_max + 1), dtype=np.int64)
    gaps_arr = np.zeros(reps, dtype=np.int64)
    cdef int64_t[:, ::1] counts = counts_arr
    cdef int64_t[::1] gaps = gaps_arr
    cdef Py_ssize_t i, failed = -1
    cdef double y, r, spacing, left, length
    cdef double big = factor * r_max
    cdef int64_t c, run, scanned
    with rng.bit_generator.lock, nogil:
        for i in range(reps):
            y = random_standard_exponential(bg)
            r = _draw_forward(lc, bg)
            spacing = _draw_straddle(lc, r, attempts, bg)
            c = 1 + random_poisson(bg, y * expm1(spacing - r))
            left = y * exp(spacing - r)
            if c <= r_max:
                counts[i, c] += 1
            run = 1 if c > big else 0
            scanned = 1
            while run < consecutive:
                if scanned >= gap_budget:
                    break
                spacing = _draw_spacing(lc, bg)
                length = left * expm1(spacing)
                c = random_poisson(bg, length)
                left += length
                scanned += 1
                if c <= r_max:
                    counts[i, c] += 1
                run = run + 1 if c > big else 0
            gaps[i] = scanned
            if run < consecutive:
                failed = i
                break
    return counts_arr, gaps_arr, failed
