"""Ring perception: connected components and a smallest-set-of-smallest-rings.

The SSSR is assembled greedily: for every non-bridge bond the shortest cycle
through that bond is a candidate; candidates are taken shortest-first while
linearly independent over GF(2) on the bond set, until the cyclomatic number
(bonds - atoms + components) is reached.  Fundamental cycles from a spanning
forest are appended as fallback candidates so the count is always exact.
"""

from __future__ import annotations

from collections import deque

from .model import Bond


def connected_components(n_atoms: int, bonds: tuple[Bond, ...]) -> tuple[tuple[int, ...], ...]:
    """Connected components as sorted atom-index tuples, ordered by first atom."""
    adj: list[list[int]] = [[] for _ in range(n_atoms)]
    for bond in bonds:
        adj[bond.a].append(bond.b)
        adj[bond.b].append(bond.a)
    seen = [False] * n_atoms
    comps: list[tuple[int, ...]] = []
    for root in range(n_atoms):
        if seen[root]:
            continue
        queue = deque([root])
        seen[root] = True
        comp = [root]
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if not seen[y]:
                    seen[y] = True
                    comp.append(y)
                    queue.append(y)
        comps.append(tuple(sorted(comp)))
    return tuple(comps)


def cyclomatic_number(n_atoms: int, bonds: tuple[Bond, ...]) -> int:
    return len(bonds) - n_atoms + len(connected_components(n_atoms, bonds))


def sssr(n_atoms: int, bonds: tuple[Bond, ...]) -> tuple[tuple[int, ...], ...]:
    """Smallest set of smallest rings as normalized atom cycles.

    Returns exactly ``cyclomatic_number`` rings, sorted by (length, atoms).
    """
    mu = cyclomatic_number(n_atoms, bonds)
    if mu == 0:
        return ()

    adj: list[list[int]] = [[] for _ in range(n_atoms)]
    for bond in bonds:
        adj[bond.a].append(bond.b)
        adj[bond.b].append(bond.a)
    for nbrs in adj:
        nbrs.sort()

    candidates: dict[tuple[int, ...], None] = {}
    for bond in bonds:
        cycle = _shortest_cycle_through(adj, bond.a, bond.b)
        if cycle is not None:
            candidates.setdefault(_normalize_cycle(cycle))
    for cycle in _fundamental_cycles(n_atoms, adj):
        candidates.setdefault(_normalize_cycle(cycle))

    bond_index = {bond.key: i for i, bond in enumerate(bonds)}
    basis: dict[int, int] = {}  # highest set bit -> reduced mask
    chosen: list[tuple[int, ...]] = []
    for cycle in sorted(candidates, key=lambda c: (len(c), c)):
        mask = _cycle_mask(cycle, bond_index)
        while mask:
            high = mask.bit_length() - 1
            if high not in basis:
                basis[high] = mask
                chosen.append(cycle)
                break
            mask ^= basis[high]
        if len(chosen) == mu:
            break
    return tuple(sorted(chosen, key=lambda c: (len(c), c)))


def _shortest_cycle_through(adj: list[list[int]], u: int, v: int) -> list[int] | None:
    """Shortest path u..v avoiding the (u, v) edge itself; None across a bridge."""
    prev: dict[int, int | None] = {u: None}
    queue = deque([u])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if (x == u and y == v) or (x == v and y == u):
                continue
            if y in prev:
                continue
            prev[y] = x
            if y == v:
                path = [v]
                while path[-1] is not None and prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                path.reverse()
                return path
            queue.append(y)
    return None


def _fundamental_cycles(n_atoms: int, adj: list[list[int]]) -> list[list[int]]:
    parent = [-1] * n_atoms
    depth = [-1] * n_atoms
    cycles: list[list[int]] = []
    tree_edges: set[tuple[int, int]] = set()
    for root in range(n_atoms):
        if depth[root] != -1:
            continue
        depth[root] = 0
        queue = deque([root])
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if depth[y] == -1:
                    depth[y] = depth[x] + 1
                    parent[y] = x
                    tree_edges.add((x, y) if x < y else (y, x))
                    queue.append(y)
    seen_back: set[tuple[int, int]] = set()
    for x in range(n_atoms):
        for y in adj[x]:
            key = (x, y) if x < y else (y, x)
            if key in tree_edges or key in seen_back:
                continue
            seen_back.add(key)
            cycles.append(_tree_cycle(parent, depth, x, y))
    return cycles


def _tree_cycle(parent: list[int], depth: list[int], u: int, v: int) -> list[int]:
    left, right = [u], [v]
    while depth[left[-1]] > depth[right[-1]]:
        left.append(parent[left[-1]])
    while depth[right[-1]] > depth[left[-1]]:
        right.append(parent[right[-1]])
    while left[-1] != right[-1]:
        left.append(parent[left[-1]])
        right.append(parent[right[-1]])
    return left + right[-2::-1]


def _normalize_cycle(cycle: list[int]) -> tuple[int, ...]:
    k = len(cycle)
    best: tuple[int, ...] | None = None
    for i in range(k):
        for step in (1, -1):
            cand = tuple(cycle[(i + step * j) % k] for j in range(k))
            if best is None or cand < best:
                best = cand
    return best


def _cycle_mask(cycle: tuple[int, ...], bond_index: dict[tuple[int, int], int]) -> int:
    mask = 0
    k = len(cycle)
    for i in range(k):
        a, b = cycle[i], cycle[(i + 1) % k]
        mask |= 1 << bond_index[(a, b) if a < b else (b, a)]
    return mask
