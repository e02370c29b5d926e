"""Array encoding of an SCM under a regime, and kernel backend selection.

The compiled Cython backend is used when it was built; otherwise the
pure-Python backend with the same contract is imported.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from cftwin import _kernel_py
from cftwin.interventions import Atomic, Counterfactual

try:
    from cftwin import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

_backend = _compiled if _compiled is not None else _kernel_py

KIND_MECH, KIND_ATOMIC, KIND_FIXED, KIND_CF, KIND_READS = range(5)


def backend_name() -> str:
    return _backend.BACKEND


def available_backends() -> list[str]:
    return ["python"] + (["compiled"] if _compiled is not None else [])


def use_backend(name: str) -> str:
    """Switch backends; returns the previous backend's name."""
    global _backend
    previous = _backend.BACKEND
    if name == "python":
        _backend = _kernel_py
    elif name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not built")
        _backend = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous


def get_backend(name: str | None = None):
    if name is None:
        return _backend
    return {"python": _kernel_py, "compiled": _compiled}[name]


def cumulative(row, domain) -> list[float]:
    """Float cumulative masses of a policy row in domain order.

    The last positive-mass entry and everything after it are set to 2.0
    so that any draw in [0, 1) lands on a value with positive mass.
    """
    probs = [float(row.get(v, 0)) for v in domain]
    last = max(i for i, p in enumerate(probs) if p > 0)
    out = []
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        out.append(2.0 if i >= last else acc)
    return out


def resolve(row, domain, r: float) -> int:
    """Draw from a policy row with the uniform ``r``, as the kernel does."""
    cum = cumulative(row, domain)
    i = 0
    while not r < cum[i]:
        i += 1
    return domain[i]


@dataclass
class Encoded:
    names: tuple  # exogenous then endogenous in topological order
    domains: tuple
    n_exo: int
    u_support: np.ndarray
    u_probs: list
    u_cdf: np.ndarray
    par_ptr: np.ndarray
    par_idx: np.ndarray
    par_stride: np.ndarray
    tab_ptr: np.ndarray
    tab: np.ndarray
    kind: np.ndarray
    atomic: np.ndarray
    key_slot: np.ndarray
    pol_ptr: np.ndarray
    row_len: np.ndarray
    pol_cum: np.ndarray
    noise_col: np.ndarray
    n_noise: int

    def decode(self, idx: np.ndarray) -> np.ndarray:
        """Map value indices back to domain values, column by column."""
        out = np.empty(idx.shape, dtype=np.int64)
        for c, dom in enumerate(self.domains):
            out[:, c] = np.asarray(dom, dtype=np.int64)[idx[:, c]]
        return out


def encode(scm, regime) -> Encoded:
    """Flatten ``scm`` with a bound ``regime`` into kernel arrays."""
    exo = list(scm.exogenous)
    endo = scm.order
    names = tuple(exo + endo)
    slot = {n: i for i, n in enumerate(names)}
    domains = tuple(tuple(scm.domains[n]) for n in names)
    pos = [{v: i for i, v in enumerate(dom)} for dom in domains]

    support = [(vals, p) for vals, p in scm.exogenous_pmf if p]
    u_support = np.array([[pos[e][v] for e, v in enumerate(vals)] for vals, _ in support],
                         dtype=np.int32).reshape(len(support), len(exo))
    u_probs = [p for _, p in support]
    u_cdf = np.cumsum([float(p) for p in u_probs])
    u_cdf[-1] = 2.0  # draws in [0, 1) always land inside the support

    par_ptr, par_idx, par_stride = [0], [], []
    tab_ptr, tab = [], []
    kind, atomic, key_slot, pol_ptr, row_len, pol_cum, noise_col = ([] for _ in range(7))
    n_noise = 0
    for n in endo:
        j_slot = slot[n]
        mech = scm.mechanisms[n]
        strides = []
        acc = 1
        for p in reversed(mech.parents):
            strides.append(acc)
            acc *= len(scm.domains[p])
        strides.reverse()
        for p, s in zip(mech.parents, strides):
            par_idx.append(slot[p])
            par_stride.append(s)
        par_ptr.append(len(par_idx))
        tab_ptr.append(len(tab))
        # mixed radix, first parent most significant: matches itertools.product
        for combo in itertools.product(*(scm.domains[p] for p in mech.parents)):
            tab.append(pos[j_slot][mech.table[combo]])

        iv = regime.get(n) if regime is not None else None
        dom = domains[j_slot]
        row_len.append(len(dom))
        atomic.append(0)
        key_slot.append(-1)
        pol_ptr.append(len(pol_cum))
        noise_col.append(-1)
        if iv is None:
            kind.append(KIND_MECH)
            continue
        if isinstance(iv, Atomic):
            kind.append(KIND_ATOMIC)
            atomic[-1] = pos[j_slot][iv.value]
            continue
        if isinstance(iv, Counterfactual):
            kind.append(KIND_CF)
            keys = dom
        elif iv.reads is not None:
            kind.append(KIND_READS)
            key_slot[-1] = slot[iv.reads]
            keys = domains[slot[iv.reads]]
        else:
            kind.append(KIND_FIXED)
            keys = [None]
        for key in keys:
            pol_cum.extend(cumulative(iv.policy.row(key), dom))
        noise_col[-1] = n_noise
        n_noise += 1

    i64 = lambda a: np.asarray(a, dtype=np.int64)
    i32 = lambda a: np.asarray(a, dtype=np.int32)
    return Encoded(
        names=names, domains=domains, n_exo=len(exo),
        u_support=np.ascontiguousarray(u_support), u_probs=u_probs, u_cdf=u_cdf,
        par_ptr=i64(par_ptr), par_idx=i64(par_idx), par_stride=i64(par_stride),
        tab_ptr=i64(tab_ptr), tab=i32(tab), kind=i32(kind), atomic=i32(atomic),
        key_slot=i64(key_slot), pol_ptr=i64(pol_ptr), row_len=i32(row_len),
        pol_cum=np.asarray(pol_cum, dtype=np.float64), noise_col=i32(noise_col),
        n_noise=n_noise)


def forward(enc: Encoded, u_rows, noise, backend: str | None = None) -> np.ndarray:
    return get_backend(backend).forward(enc, u_rows, noise)


def draw(enc: Encoded, seed: int, start: int, n: int, backend: str | None = None):
    """Per-trial exogenous rows and policy noise for trials ``start .. start+n-1``.

    Column 0 of the uniform block picks the exogenous row; the remaining
    columns feed the policy draws in topological target order.
    """
    be = get_backend(backend)
    block = be.uniforms(seed, start, n, 1 + enc.n_noise)
    rows = be.pick_rows(enc.u_cdf, np.ascontiguousarray(block[:, 0]))
    return rows, np.ascontiguousarray(block[:, 1:])
