"""Pure-numpy enumeration kernel: chunk-vectorized over assignment indices.

Semantics are shared with the compiled twin in ``_native.pyx``: assignment
``idx`` encodes one slope per (type, cell) slot, slot ``t * C + c`` holding
digit ``(idx // A**(t*C+c)) % A`` into the alphabet, and the best feasible
assignment is the one with maximal welfare, ties broken by smallest index.
"""

from __future__ import annotations

import numpy as np

BACKEND = "fallback"
_CHUNK = 1 << 16


def run_enumeration(
    wc: np.ndarray,
    gd: np.ndarray,
    wb: np.ndarray,
    alphabet: np.ndarray,
    mw: np.ndarray,
    ew: np.ndarray,
    alpha: float,
    tol: float,
    cap_base: bool,
    start: int,
    stop: int,
):
    """Scan assignments in [start, stop); return (best welfare, best index, feasible count)."""
    n_types, n_cells = wc.shape
    n_letters = alphabet.size
    slots = n_types * n_cells
    powers = n_letters ** np.arange(slots, dtype=np.int64)
    wc_tot = wc.sum(axis=1)
    wb_tot = wb.sum(axis=1)
    agent_w = alpha * ew
    insurer_w = (1.0 - alpha) * mw

    best_w = -np.inf
    best_idx = -1
    feasible_count = 0

    for lo in range(start, stop, _CHUNK):
        hi = min(lo + _CHUNK, stop)
        idx = np.arange(lo, hi, dtype=np.int64)
        digits = (idx[:, None] // powers[None, :]) % n_letters
        r = alphabet[digits].reshape(idx.size, n_types, n_cells)

        across = np.einsum("ic,njc->nij", wc, r)
        adiag = np.einsum("nii->ni", across)
        avg = 0.5 * (r[:, :-1, :] + r[:, 1:, :])
        rent = np.concatenate(
            [np.zeros((idx.size, 1)), np.cumsum(np.einsum("kc,nkc->nk", gd, avg), axis=1)],
            axis=1,
        )
        a00 = across[:, 0, 0]
        p_base = wc_tot[0] - a00 if cap_base else np.zeros(idx.size)
        p = p_base[:, None] + (a00[:, None] - rent - adiag)
        u = -p - adiag

        gain = (-p[:, None, :] - across) - u[:, :, None]
        ii = np.arange(n_types)
        gain[:, ii, ii] = -np.inf
        ic_ok = gain.reshape(idx.size, -1).max(axis=1) <= tol

        caps = wc_tot[None, :] - adiag
        p1_ok = np.all(p <= caps + tol, axis=1)
        v = p - (wb_tot[None, :] - np.einsum("tc,ntc->nt", wb, r))
        p2_ok = v @ mw >= -tol

        feasible = ic_ok & p1_ok & p2_ok
        feasible_count += int(feasible.sum())
        if not feasible.any():
            continue
        welfare = u @ agent_w + v @ insurer_w
        welfare[~feasible] = -np.inf
        k = int(np.argmax(welfare))
        if welfare[k] > best_w:
            best_w = float(welfare[k])
            best_idx = int(idx[k])

    return best_w, best_idx, feasible_count
