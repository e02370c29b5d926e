"""Independent reference implementations used only by the tests.

Nothing here imports the package's graph or semantics code, so agreement
between the two is evidence rather than tautology.
"""
from __future__ import annotations

import itertools
from fractions import Fraction


def dsep_by_paths(nodes, edges, x, y, z):
    """d-separation by enumerating every simple undirected path.

    A path is active when each interior node is either a non-collider
    outside ``z`` or a collider that is in ``z`` or has a descendant in it.
    """
    parents = {n: set() for n in nodes}
    children = {n: set() for n in nodes}
    for p, c in edges:
        parents[c].add(p)
        children[p].add(c)

    def desc(n):
        out, stack = set(), [n]
        while stack:
            for c in children[stack.pop()]:
                if c not in out:
                    out.add(c)
                    stack.append(c)
        return out

    z = set(z)
    opens = {n for n in nodes if n in z or desc(n) & z}
    nbrs = {n: parents[n] | children[n] for n in nodes}

    def active(path):
        for i in range(1, len(path) - 1):
            a, m, b = path[i - 1], path[i], path[i + 1]
            collider = a in parents[m] and b in parents[m]
            if collider and m not in opens:
                return False
            if not collider and m in z:
                return False
        return True

    def paths(src, dst):
        stack = [[src]]
        while stack:
            path = stack.pop()
            last = path[-1]
            if last == dst:
                yield path
                continue
            for n in nbrs[last]:
                if n not in path:
                    stack.append(path + [n])

    for s in x:
        for t in y:
            for path in paths(s, t):
                if active(path):
                    return False
    return True


def forward_dags(n):
    """Every DAG on nodes ``0..n-1`` whose edges go from lower to higher index.

    Each DAG is isomorphic to one of these, and the tests check every
    triple of node sets, so node labels do not matter.
    """
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for mask in range(1 << len(pairs)):
        yield [pairs[k] for k in range(len(pairs)) if mask >> k & 1]


def disjoint_triples(nodes):
    """All ``(x, y, z)`` with nonempty disjoint ``x``, ``y`` and any disjoint ``z``."""
    for labels in itertools.product(range(4), repeat=len(nodes)):
        x = [n for n, l in zip(nodes, labels) if l == 1]
        y = [n for n, l in zip(nodes, labels) if l == 2]
        z = [n for n, l in zip(nodes, labels) if l == 3]
        if x and y:
            yield x, y, z


def reference_joint(scm, kinds, policies, exact=True):
    """Joint over endogenous variables, written directly from the definitions.

    ``kinds[target]`` is ``"do"`` (``policies[target]`` is a value),
    ``"rho"`` (a dict natural -> {value: prob}), or ``"soft"``
    (``policies[target] = (reader or None, dict input -> {value: prob})``).
    Variables are visited in the order of a fresh Kahn sort.
    """
    order = _kahn(scm)
    conv = Fraction if exact else float
    table = {}

    def walk(i, vals, w):
        if i == len(order):
            key = tuple(vals[v] for v in scm.endogenous)
            table[key] = table.get(key, 0) + w
            return
        v = order[i]
        mech = scm.mechanisms[v]
        natural = mech.table[tuple(vals[p] for p in mech.parents)]
        kind = kinds.get(v)
        if kind is None:
            branches = [(natural, 1)]
        elif kind == "do":
            branches = [(policies[v], 1)]
        elif kind == "rho":
            branches = list(policies[v][natural].items())
        else:
            reader, rows = policies[v]
            branches = list(rows[None if reader is None else vals[reader]].items())
        for val, p in branches:
            if p:
                walk(i + 1, {**vals, v: val}, w * conv(p))

    for u, p in scm.exogenous_pmf:
        if p:
            walk(0, dict(zip(scm.exogenous, u)), conv(p))
    return table


def _kahn(scm):
    endo = list(scm.endogenous)
    indeg = {v: sum(1 for p in scm.mechanisms[v].parents if p in scm.mechanisms)
             for v in endo}
    done, out = set(), []
    while len(out) < len(endo):
        for v in endo:
            if v not in done and indeg[v] == 0:
                done.add(v)
                out.append(v)
                for w in endo:
                    if v in scm.mechanisms[w].parents:
                        indeg[w] -= 1
                break
    return out
