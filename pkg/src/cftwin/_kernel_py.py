"""Pure-Python backend for the forward-evaluation kernel.

Mirrors ``_kernel.pyx`` operation for operation; the two must produce
identical arrays for identical inputs.
"""
import numpy as np

MASK = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
BACKEND = "python"


def _mix(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def uniform(seed, trial, column):
    """Counter-based uniform in [0, 1) keyed on (seed, trial, column)."""
    z = _mix((seed * GOLDEN + 1) & MASK)
    z = _mix((z + (trial + 1) * GOLDEN) & MASK)
    z = _mix((z + (column + 1) * GOLDEN) & MASK)
    return (z >> 11) * (1.0 / 9007199254740992.0)


def uniforms(seed, start, n, k):
    seed &= MASK
    out = np.empty((n, k), dtype=np.float64)
    for i in range(n):
        for c in range(k):
            out[i, c] = uniform(seed, start + i, c)
    return out


def pick_rows(cdf, draws):
    """Index of the first cdf entry strictly above each draw."""
    cdf = list(cdf)
    last = len(cdf) - 1
    out = np.empty(len(draws), dtype=np.int64)
    for i, r in enumerate(draws):
        lo, hi = 0, last
        while lo < hi:
            mid = (lo + hi) // 2
            if r < cdf[mid]:
                hi = mid
            else:
                lo = mid + 1
        out[i] = lo
    return out


def forward(m, u_rows, noise):
    """Evaluate every trial of an encoded model.

    ``m`` is a :class:`cftwin.kernel.Encoded`; ``u_rows`` indexes its
    exogenous support; ``noise`` holds one uniform per policy column.
    Returns value *indices* with shape ``(len(u_rows), n_slots)``.
    """
    n = len(u_rows)
    n_exo = m.n_exo
    n_endo = len(m.kind)
    u_support = m.u_support.tolist()
    par_ptr = m.par_ptr.tolist()
    par_idx = m.par_idx.tolist()
    par_stride = m.par_stride.tolist()
    tab_ptr = m.tab_ptr.tolist()
    tab = m.tab.tolist()
    kind = m.kind.tolist()
    atomic = m.atomic.tolist()
    key_slot = m.key_slot.tolist()
    pol_ptr = m.pol_ptr.tolist()
    row_len = m.row_len.tolist()
    pol_cum = m.pol_cum.tolist()
    noise_col = m.noise_col.tolist()
    noise = np.asarray(noise).tolist()
    rows = np.asarray(u_rows).tolist()

    out = np.empty((n, n_exo + n_endo), dtype=np.int32)
    for t in range(n):
        vals = list(u_support[rows[t]]) + [0] * n_endo
        for j in range(n_endo):
            k = kind[j]
            if k == 1:
                val = atomic[j]
            else:
                nat = 0
                if k == 0 or k == 3:
                    idx = tab_ptr[j]
                    for q in range(par_ptr[j], par_ptr[j + 1]):
                        idx += vals[par_idx[q]] * par_stride[q]
                    nat = tab[idx]
                if k == 0:
                    val = nat
                else:
                    if k == 2:
                        row = 0
                    elif k == 3:
                        row = nat
                    else:
                        row = vals[key_slot[j]]
                    base = pol_ptr[j] + row * row_len[j]
                    r = noise[t][noise_col[j]]
                    val = 0
                    while not r < pol_cum[base + val]:
                        val += 1
            vals[n_exo + j] = val
        out[t] = vals
    return out
