"""Causal diagrams with explicit exogenous nodes.

Confounding is encoded by a shared exogenous parent rather than a
bidirected edge. All queries are read-only and every ordering is
deterministic, with ties broken by declaration order (exogenous nodes
first, then endogenous nodes).
"""
from __future__ import annotations

import heapq
from collections import deque
from typing import Iterable

from cftwin.errors import StructuralError

PRIME = "'"


class CausalDiagram:
    """Immutable DAG over endogenous and exogenous variables.

    Parameters
    ----------
    endogenous, exogenous:
        Variable names in declaration order.
    edges:
        ``(parent, child)`` pairs. Children must be endogenous; exogenous
        nodes have no parents.
    """

    def __init__(self, endogenous: Iterable[str], exogenous: Iterable[str] = (),
                 edges: Iterable[tuple[str, str]] = ()):
        self.endogenous = tuple(endogenous)
        self.exogenous = tuple(exogenous)
        self.nodes = self.exogenous + self.endogenous
        if len(set(self.nodes)) != len(self.nodes):
            raise StructuralError(f"duplicate variable names in {self.nodes}")
        for name in self.nodes:
            if not isinstance(name, str) or not name:
                raise StructuralError(f"invalid variable name {name!r}")
        self._rank = {n: i for i, n in enumerate(self.nodes)}
        exo = set(self.exogenous)

        parents: dict[str, list[str]] = {n: [] for n in self.nodes}
        children: dict[str, list[str]] = {n: [] for n in self.nodes}
        seen = set()
        for parent, child in edges:
            if parent not in self._rank or child not in self._rank:
                raise StructuralError(
                    f"edge {parent}->{child} references an undeclared node",
                    edge=(parent, child))
            if child in exo:
                raise StructuralError(
                    f"exogenous node {child} cannot have parent {parent}",
                    edge=(parent, child))
            if (parent, child) in seen:
                continue
            seen.add((parent, child))
            parents[child].append(parent)
            children[parent].append(child)
        self.edges = frozenset(seen)
        self._parents = {n: tuple(sorted(p, key=self._rank.__getitem__))
                         for n, p in parents.items()}
        self._children = {n: tuple(sorted(c, key=self._rank.__getitem__))
                          for n, c in children.items()}
        self._order = self._toposort()

    def __repr__(self):
        arcs = ", ".join(f"{p}->{c}" for p, c in sorted(
            self.edges, key=lambda e: (self._rank[e[0]], self._rank[e[1]])))
        return f"CausalDiagram([{arcs}])"

    def __eq__(self, other):
        if not isinstance(other, CausalDiagram):
            return NotImplemented
        return (self.endogenous == other.endogenous
                and self.exogenous == other.exogenous
                and self.edges == other.edges)

    def __hash__(self):
        return hash((self.endogenous, self.exogenous, self.edges))

    def _check(self, n):
        if n not in self._rank:
            raise KeyError(f"unknown node {n!r}")

    def parents(self, n: str) -> tuple[str, ...]:
        self._check(n)
        return self._parents[n]

    def children(self, n: str) -> tuple[str, ...]:
        self._check(n)
        return self._children[n]

    def is_exogenous(self, n: str) -> bool:
        self._check(n)
        return n in self.exogenous

    def _toposort(self):
        # Kahn's algorithm with a heap keyed on declaration rank.
        indeg = {n: len(self._parents[n]) for n in self.nodes}
        heap = [self._rank[n] for n in self.nodes if indeg[n] == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            n = self.nodes[heapq.heappop(heap)]
            order.append(n)
            for c in self._children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(heap, self._rank[c])
        if len(order) != len(self.nodes):
            edge = self._find_cycle_edge({n for n in self.nodes if indeg[n] > 0})
            raise StructuralError(
                f"cycle detected through edge {edge[0]}->{edge[1]}", edge=edge)
        return tuple(order)

    def _find_cycle_edge(self, remaining):
        # Every node left by Kahn has a parent inside `remaining`; walking
        # parents must revisit a node.
        start = min(remaining, key=self._rank.__getitem__)
        path = [start]
        index = {start: 0}
        while True:
            cur = path[-1]
            nxt = next(p for p in self._parents[cur] if p in remaining)
            if nxt in index:
                return (nxt, cur)
            index[nxt] = len(path)
            path.append(nxt)

    def topological_order(self) -> list[str]:
        return list(self._order)

    def ancestors(self, n: str) -> set[str]:
        self._check(n)
        return self._reach(n, self._parents)

    def descendants(self, n: str) -> set[str]:
        self._check(n)
        return self._reach(n, self._children)

    @staticmethod
    def _reach(n, nbrs):
        out = set()
        stack = list(nbrs[n])
        while stack:
            m = stack.pop()
            if m not in out:
                out.add(m)
                stack.extend(nbrs[m])
        return out

    def d_separated(self, x: Iterable[str], y: Iterable[str],
                    z: Iterable[str] = ()) -> bool:
        """Return True iff ``x`` and ``y`` are d-separated given ``z``.

        Uses the reachability ("Bayes ball") formulation: a trail may pass
        a collider only if the collider or one of its descendants is in
        ``z``, and may pass a non-collider only if it is not in ``z``.
        """
        x, y, z = set(x), set(y), set(z)
        for n in x | y | z:
            self._check(n)
        if x & y or x & z or y & z:
            raise ValueError("x, y, z must be pairwise disjoint")
        if not x or not y:
            return True

        # nodes with a descendant (or self) in z
        anc_z = set(z)
        for n in z:
            anc_z |= self._reach(n, self._parents)

        # state: (node, arrived_from_child). Arriving "up" means we came
        # from a child of node; "down" means from a parent.
        UP, DOWN = True, False
        visited = set()
        queue = deque((n, UP) for n in x)
        while queue:
            node, direction = queue.popleft()
            if (node, direction) in visited:
                continue
            visited.add((node, direction))
            if node not in z and node in y:
                return False
            if direction is UP:
                if node not in z:
                    queue.extend((p, UP) for p in self._parents[node])
                    queue.extend((c, DOWN) for c in self._children[node])
            else:
                if node not in z:
                    queue.extend((c, DOWN) for c in self._children[node])
                if node in anc_z:
                    queue.extend((p, UP) for p in self._parents[node])
        return True

    def without_edges(self, edges: Iterable[tuple[str, str]]) -> "CausalDiagram":
        drop = set(edges)
        return CausalDiagram(self.endogenous, self.exogenous,
                             [e for e in self.edges if e not in drop])


def topological_order(d: CausalDiagram) -> list[str]:
    return d.topological_order()


def ancestors(d: CausalDiagram, n: str) -> set[str]:
    return d.ancestors(n)


def descendants(d: CausalDiagram, n: str) -> set[str]:
    return d.descendants(n)


def d_separated(d: CausalDiagram, x, y, z=()) -> bool:
    return d.d_separated(x, y, z)


def check_user_name(name: str) -> None:
    """Reject names that collide with the primed-copy convention."""
    if name.endswith(PRIME):
        raise StructuralError(
            f"variable name {name!r} ends with {PRIME!r}, which is reserved "
            "for twin copies")


def primed(name: str) -> str:
    return name + PRIME
