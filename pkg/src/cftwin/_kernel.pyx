# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the forward-evaluation kernel.

Same contract as ``_kernel_py``; see that module for argument docs.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int32_t

cnp.import_array()

BACKEND = "compiled"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t seed, uint64_t trial, uint64_t column) nogil:
    cdef uint64_t z = _mix(seed * GOLDEN + 1)
    z = _mix(z + (trial + 1) * GOLDEN)
    z = _mix(z + (column + 1) * GOLDEN)
    return <double>(z >> 11) * (1.0 / 9007199254740992.0)


def uniform(seed, trial, column):
    return _uniform(<uint64_t>(seed & 0xFFFFFFFFFFFFFFFF), <uint64_t>trial,
                    <uint64_t>column)


def uniforms(seed, Py_ssize_t start, Py_ssize_t n, Py_ssize_t k):
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    out = np.empty((n, k), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, c
    with nogil:
        for i in range(n):
            for c in range(k):
                o[i, c] = _uniform(s, <uint64_t>(start + i), <uint64_t>c)
    return out


def pick_rows(cdf, draws):
    cdef const double[::1] cd = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef const double[::1] dr = np.ascontiguousarray(draws, dtype=np.float64)
    cdef Py_ssize_t n = dr.shape[0]
    cdef Py_ssize_t last = cd.shape[0] - 1
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef Py_ssize_t i, lo, hi, mid
    cdef double r
    with nogil:
        for i in range(n):
            r = dr[i]
            lo = 0
            hi = last
            while lo < hi:
                mid = (lo + hi) // 2
                if r < cd[mid]:
                    hi = mid
                else:
                    lo = mid + 1
            o[i] = lo
    return out


def forward(m, u_rows, noise):
    cdef const int32_t[:, ::1] u_support = m.u_support
    cdef const int64_t[::1] par_ptr = m.par_ptr
    cdef const int64_t[::1] par_idx = m.par_idx
    cdef const int64_t[::1] par_stride = m.par_stride
    cdef const int64_t[::1] tab_ptr = m.tab_ptr
    cdef const int32_t[::1] tab = m.tab
    cdef const int32_t[::1] kind = m.kind
    cdef const int32_t[::1] atomic = m.atomic
    cdef const int64_t[::1] key_slot = m.key_slot
    cdef const int64_t[::1] pol_ptr = m.pol_ptr
    cdef const int32_t[::1] row_len = m.row_len
    cdef const double[::1] pol_cum = m.pol_cum
    cdef const int32_t[::1] noise_col = m.noise_col
    cdef const int64_t[::1] rows = np.ascontiguousarray(u_rows, dtype=np.int64)
    cdef const double[:, ::1] nz = np.ascontiguousarray(noise, dtype=np.float64)

    cdef Py_ssize_t n = rows.shape[0]
    cdef Py_ssize_t n_exo = m.n_exo
    cdef Py_ssize_t n_endo = kind.shape[0]
    out = np.empty((n, n_exo + n_endo), dtype=np.int32)
    cdef int32_t[:, ::1] o = out

    cdef Py_ssize_t t, e, j, q, base
    cdef int64_t idx
    cdef int32_t k, val, nat, row
    cdef double r
    with nogil:
        for t in range(n):
            for e in range(n_exo):
                o[t, e] = u_support[rows[t], e]
            for j in range(n_endo):
                k = kind[j]
                if k == 1:
                    val = atomic[j]
                else:
                    nat = 0
                    if k == 0 or k == 3:
                        idx = tab_ptr[j]
                        for q in range(par_ptr[j], par_ptr[j + 1]):
                            idx += o[t, par_idx[q]] * par_stride[q]
                        nat = tab[idx]
                    if k == 0:
                        val = nat
                    else:
                        if k == 2:
                            row = 0
                        elif k == 3:
                            row = nat
                        else:
                            row = o[t, key_slot[j]]
                        base = pol_ptr[j] + row * row_len[j]
                        r = nz[t, noise_col[j]]
                        val = 0
                        while not r < pol_cum[base + val]:
                            val += 1
                o[t, n_exo + j] = val
    return out
