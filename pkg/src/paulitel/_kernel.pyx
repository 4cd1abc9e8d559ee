# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evolution kernels; semantics identical to paulitel._kernel_py."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def apply_pairs_dense(cnp.uint8_t[:, ::1] state,
                      cnp.int64_t[::1] pa,
                      cnp.int64_t[::1] pb,
                      cnp.int64_t[::1] gates,
                      cnp.uint8_t[:, ::1] table):
    cdef Py_ssize_t n_rows = state.shape[0]
    cdef Py_ssize_t n_pairs = pa.shape[0]
    cdef Py_ssize_t r, p
    cdef cnp.int64_t i, j, g
    cdef cnp.uint8_t a, b, v, out
    for r in range(n_rows):
        for p in range(n_pairs):
            i = pa[p]
            j = pb[p]
            a = state[r, i]
            b = state[r, j]
            if (a | b) != 0:
                g = gates[p]
                v = a | (b << 2)
                out = table[g, v]
                state[r, i] = out & 3
                state[r, j] = out >> 2


def match_sites(cnp.int64_t[::1] support,
                cnp.int64_t[::1] draws,
                cnp.uint8_t[::1] stamp,
                int stamp_val,
                cnp.int64_t[::1] out_pairs):
    cdef Py_ssize_t n_support = support.shape[0]
    cdef Py_ssize_t n_draws = draws.shape[0]
    cdef Py_ssize_t k = 0
    cdef Py_ssize_t n_pairs = 0
    cdef Py_ssize_t idx
    cdef cnp.int64_t s, j
    cdef cnp.uint8_t sv = <cnp.uint8_t> stamp_val
    for idx in range(n_support):
        s = support[idx]
        if stamp[s] == sv:
            continue
        stamp[s] = sv
        while True:
            if k >= n_draws:
                return -1, k
            j = draws[k]
            k += 1
            if j != s and stamp[j] != sv:
                break
        stamp[j] = sv
        out_pairs[2 * n_pairs] = s
        out_pairs[2 * n_pairs + 1] = j
        n_pairs += 1
    return n_pairs, k


def step_csr(cnp.int64_t[::1] row_ptr,
             cnp.uint8_t[::1] letters,
             cnp.int64_t[::1] slots,
             cnp.int64_t[::1] pa,
             cnp.int64_t[::1] pb,
             cnp.int64_t[::1] gates,
             cnp.uint8_t[::1] table_flat):
    cdef Py_ssize_t n_rows = row_ptr.shape[0] - 1
    cdef Py_ssize_t n_pairs = pa.shape[0]
    cdef Py_ssize_t nnz = letters.shape[0]

    out_row_ptr_arr = np.zeros(n_rows + 1, dtype=np.int64)
    out_sites_arr = np.empty(2 * nnz, dtype=np.int64)
    out_letters_arr = np.empty(2 * nnz, dtype=np.uint8)
    active_arr = np.zeros(2 * n_pairs, dtype=np.uint8)
    cdef cnp.int64_t[::1] out_row_ptr = out_row_ptr_arr
    cdef cnp.int64_t[::1] out_sites = out_sites_arr
    cdef cnp.uint8_t[::1] out_letters = out_letters_arr
    cdef cnp.uint8_t[::1] active = active_arr

    # scratch: accumulated pair code per touched pair, reset after each row
    scratch_arr = np.zeros(n_pairs, dtype=np.uint8)
    cdef cnp.uint8_t[::1] scratch = scratch_arr
    cdef Py_ssize_t max_row = 0
    cdef Py_ssize_t r, e
    for r in range(n_rows):
        if row_ptr[r + 1] - row_ptr[r] > max_row:
            max_row = row_ptr[r + 1] - row_ptr[r]
    touched_arr = np.empty(max_row, dtype=np.int64)
    cdef cnp.int64_t[::1] touched = touched_arr

    cdef Py_ssize_t out_k = 0
    cdef Py_ssize_t n_touched, t
    cdef cnp.int64_t slot, pid
    cdef cnp.uint8_t v, vout, a, b
    for r in range(n_rows):
        out_row_ptr[r] = out_k
        n_touched = 0
        for e in range(row_ptr[r], row_ptr[r + 1]):
            slot = slots[e]
            pid = slot >> 1
            if scratch[pid] == 0:
                touched[n_touched] = pid
                n_touched += 1
            if slot & 1:
                scratch[pid] |= letters[e] << 2
            else:
                scratch[pid] |= letters[e]
        for t in range(n_touched):
            pid = touched[t]
            v = scratch[pid]
            scratch[pid] = 0
            vout = table_flat[gates[pid] * 16 + v]
            a = vout & 3
            b = vout >> 2
            if a:
                out_sites[out_k] = pa[pid]
                out_letters[out_k] = a
                out_k += 1
                active[2 * pid] = 1
            if b:
                out_sites[out_k] = pb[pid]
                out_letters[out_k] = b
                out_k += 1
                active[2 * pid + 1] = 1
    out_row_ptr[n_rows] = out_k
    return out_row_ptr_arr, out_sites_arr[:out_k].copy(), out_letters_arr[:out_k].copy(), active_arr
