# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled enumeration kernel: odometer over assignments, tight C loops.

Must stay semantically identical to ``fallback.run_enumeration``: same slot
encoding (slot t*C+c is digit (idx // A**(t*C+c)) % A), same feasibility
tests, same tie-breaking (smallest index wins among equal welfare).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "native"


def run_enumeration(
    cnp.ndarray[cnp.float64_t, ndim=2] wc,
    cnp.ndarray[cnp.float64_t, ndim=2] gd,
    cnp.ndarray[cnp.float64_t, ndim=2] wb,
    cnp.ndarray[cnp.float64_t, ndim=1] alphabet,
    cnp.ndarray[cnp.float64_t, ndim=1] mw,
    cnp.ndarray[cnp.float64_t, ndim=1] ew,
    double alpha,
    double tol,
    bint cap_base,
    long long start,
    long long stop,
):
    cdef int n_types = wc.shape[0]
    cdef int n_cells = wc.shape[1]
    cdef int n_letters = alphabet.shape[0]
    cdef int slots = n_types * n_cells

    cdef cnp.ndarray[cnp.float64_t, ndim=1] wc_tot_arr = wc.sum(axis=1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] wb_tot_arr = wb.sum(axis=1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] agent_w_arr = alpha * ew
    cdef cnp.ndarray[cnp.float64_t, ndim=1] insurer_w_arr = (1.0 - alpha) * mw

    cdef double[:, :] wc_v = np.ascontiguousarray(wc)
    cdef double[:, :] gd_v = np.ascontiguousarray(gd)
    cdef double[:, :] wb_v = np.ascontiguousarray(wb)
    cdef double[:] alpha_v = np.ascontiguousarray(alphabet)
    cdef double[:] mw_v = np.ascontiguousarray(mw)
    cdef double[:] wc_tot = wc_tot_arr
    cdef double[:] wb_tot = wb_tot_arr
    cdef double[:] agent_w = agent_w_arr
    cdef double[:] insurer_w = insurer_w_arr

    cdef cnp.ndarray[cnp.int32_t, ndim=1] digits_arr = np.zeros(slots, dtype=np.int32)
    cdef int[:] digits = digits_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] scratch = np.zeros(
        slots + 4 * n_types + n_types * n_types, dtype=np.float64
    )
    cdef double[:] r = scratch[:slots]
    cdef double[:] rent = scratch[slots : slots + n_types]
    cdef double[:] p = scratch[slots + n_types : slots + 2 * n_types]
    cdef double[:] u = scratch[slots + 2 * n_types : slots + 3 * n_types]
    cdef double[:] v = scratch[slots + 3 * n_types : slots + 4 * n_types]
    cdef double[:] across = scratch[slots + 4 * n_types :]

    cdef long long idx = start
    cdef long long rem = start
    cdef long long best_idx = -1
    cdef long long feasible_count = 0
    cdef double best_w = -np.inf
    cdef int s, i, j, c, k
    cdef double acc, p_base, dT, welfare, own, a00
    cdef bint ok

    # seed the odometer with the base-A digits of `start`
    for s in range(slots):
        digits[s] = <int> (rem % n_letters)
        rem //= n_letters
        r[s] = alpha_v[digits[s]]

    while idx < stop:
        # cross integrals across[i*T + j] = sum_c wc[i, c] * r[j*C + c]
        for i in range(n_types):
            for j in range(n_types):
                acc = 0.0
                for c in range(n_cells):
                    acc += wc_v[i, c] * r[j * n_cells + c]
                across[i * n_types + j] = acc

        rent[0] = 0.0
        for k in range(n_types - 1):
            dT = 0.0
            for c in range(n_cells):
                dT += gd_v[k, c] * 0.5 * (r[k * n_cells + c] + r[(k + 1) * n_cells + c])
            rent[k + 1] = rent[k] + dT

        a00 = across[0]
        p_base = wc_tot[0] - a00 if cap_base else 0.0
        for i in range(n_types):
            p[i] = p_base + (a00 - rent[i] - across[i * n_types + i])
            u[i] = -p[i] - across[i * n_types + i]

        ok = True
        for i in range(n_types):
            if not ok:
                break
            for j in range(n_types):
                if i != j and (-p[j] - across[i * n_types + j]) - u[i] > tol:
                    ok = False
                    break

        if ok:
            for i in range(n_types):
                if p[i] > (wc_tot[i] - across[i * n_types + i]) + tol:
                    ok = False
                    break

        if ok:
            acc = 0.0
            for i in range(n_types):
                dT = 0.0
                for c in range(n_cells):
                    dT += wb_v[i, c] * r[i * n_cells + c]
                v[i] = p[i] - (wb_tot[i] - dT)
                acc += v[i] * mw_v[i]
            if acc < -tol:
                ok = False

        if ok:
            feasible_count += 1
            welfare = 0.0
            for i in range(n_types):
                welfare += u[i] * agent_w[i] + v[i] * insurer_w[i]
            if welfare > best_w:
                best_w = welfare
                best_idx = idx

        # advance the odometer
        idx += 1
        if idx < stop:
            s = 0
            while True:
                digits[s] += 1
                if digits[s] < n_letters:
                    r[s] = alpha_v[digits[s]]
                    break
                digits[s] = 0
                r[s] = alpha_v[0]
                s += 1

    return best_w, best_idx, feasible_count
