"""Pure-Python/numpy implementations of the hot evolution kernels.

Semantics match paulitel._kernel exactly: both backends consume the same
random draws and produce the same states, so either can back the circuit
engine. The compiled extension is preferred at import time; this module is
the fallback and the reference for parity tests.
"""

from __future__ import annotations

import numpy as np


def apply_pairs_dense(state, pa, pb, gates, table):
    """Apply one layer of 2-site gates to a dense (rows, N) letter array.

    Pairs within a layer are disjoint, so gather/scatter is well defined.
    """
    a = state[:, pa]
    b = state[:, pb]
    v = a | (b << 2)
    out = table.reshape(-1)[(gates.astype(np.int64) * 16)[None, :] + v]
    state[:, pa] = out & 3
    state[:, pb] = out >> 2


def match_sites(support, draws, stamp, stamp_val, out_pairs):
    """Pair every site in `support` with a uniform unmatched partner.

    Partners are rejection-sampled from `draws` (uniform over [0, N)); a
    site is considered matched when stamp[site] == stamp_val. Returns
    (n_pairs, n_consumed); n_pairs = -1 signals that `draws` ran out and
    the caller must retry with a fresh stamp value and more draws.
    """
    k = 0
    n_pairs = 0
    n_draws = len(draws)
    for s in support:
        s = int(s)
        if stamp[s] == stamp_val:
            continue
        stamp[s] = stamp_val
        while True:
            if k >= n_draws:
                return -1, k
            j = int(draws[k])
            k += 1
            if j != s and stamp[j] != stamp_val:
                break
        stamp[j] = stamp_val
        out_pairs[2 * n_pairs] = s
        out_pairs[2 * n_pairs + 1] = j
        n_pairs += 1
    return n_pairs, k


def step_csr(row_ptr, letters, slots, pa, pb, gates, table_flat):
    """Apply gated pairs to a batch of sparse rows in CSR form.

    `slots` gives, for each stored letter, the pair it belongs to and the
    side within it (slot = 2 * pair_id + side). Returns the new CSR triple
    (row order within a row is unspecified) plus a uint8 activity mask over
    slots: 1 where any row holds a letter after the step.
    """
    n_rows = len(row_ptr) - 1
    n_pairs = len(pa)
    active = np.zeros(2 * n_pairs, dtype=np.uint8)
    if len(letters) == 0:
        return row_ptr.copy(), np.empty(0, np.int64), np.empty(0, np.uint8), active
    row_ids = np.repeat(np.arange(n_rows, dtype=np.int64), np.diff(row_ptr))
    pid = slots >> 1
    side = (slots & 1).astype(np.uint8)
    contrib = (letters << (2 * side)).astype(np.uint8)
    key = row_ids * n_pairs + pid
    ukey, inv = np.unique(key, return_inverse=True)
    acc = np.zeros(len(ukey), dtype=np.uint8)
    np.bitwise_or.at(acc, inv, contrib)
    upid = (ukey % n_pairs).astype(np.int64)
    urow = ukey // n_pairs
    vout = table_flat[gates[upid] * 16 + acc]
    la = (vout & 3).astype(np.uint8)
    lb = (vout >> 2).astype(np.uint8)
    sela = la > 0
    selb = lb > 0
    active[2 * upid[sela]] = 1
    active[2 * upid[selb] + 1] = 1
    rows_out = np.concatenate([urow[sela], urow[selb]])
    sites_out = np.concatenate([pa[upid[sela]], pb[upid[selb]]])
    lets_out = np.concatenate([la[sela], lb[selb]])
    order = np.argsort(rows_out, kind="stable")
    new_row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
    counts = np.bincount(rows_out, minlength=n_rows)
    np.cumsum(counts, out=new_row_ptr[1:])
    return new_row_ptr, sites_out[order], lets_out[order], active
