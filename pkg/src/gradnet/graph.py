"""Cell graphs: connected undirected simple graphs with optional loops.

Vertices are labelled ``1..n``. Edges are stored canonically as ``(min, max)``
pairs. Loops are kept but never appear in input sets or degrees.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np


class GraphError(ValueError):
    """Raised for malformed or unsupported cell graphs."""


@dataclass(frozen=True)
class Bipartition:
    part1: frozenset
    part2: frozenset

    def side(self, v: int) -> int:
        return 1 if v in self.part1 else 2

    def as_lists(self) -> tuple[list[int], list[int]]:
        return sorted(self.part1), sorted(self.part2)


def count_components(n: int, edges: Iterable[tuple[int, int]]) -> int:
    """Connected components on vertex set 1..n (isolated vertices count)."""
    parent = list(range(n + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    count = n
    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            count -= 1
    return count


@dataclass(frozen=True)
class CellGraph:
    n: int
    edges: frozenset
    loops: frozenset = frozenset()

    def __post_init__(self):
        if self.n < 1:
            raise GraphError(f"vertex count must be positive, got {self.n}")
        canon = set()
        for e in self.edges:
            u, v = (int(e[0]), int(e[1]))
            if u == v:
                raise GraphError(f"self-edge ({u},{v}) must be given as a loop")
            for w in (u, v):
                if not 1 <= w <= self.n:
                    raise GraphError(f"edge endpoint {w} outside 1..{self.n}")
            canon.add((min(u, v), max(u, v)))
        for v in self.loops:
            if not 1 <= v <= self.n:
                raise GraphError(f"loop vertex {v} outside 1..{self.n}")
        object.__setattr__(self, "edges", frozenset(canon))
        object.__setattr__(self, "loops", frozenset(int(v) for v in self.loops))
        if count_components(self.n, canon) != 1:
            raise GraphError("cell graph must be connected")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_edge_list(
        cls, edges: Sequence[Sequence[int]], n: Optional[int] = None, loops: Iterable[int] = ()
    ) -> "CellGraph":
        seen = set()
        for e in edges:
            if len(e) != 2:
                raise GraphError(f"edge {e!r} is not a pair")
            key = (min(e), max(e))
            if key in seen:
                raise GraphError(f"duplicate edge {tuple(e)}")
            seen.add(key)
        if n is None:
            n = max((max(e) for e in seen), default=1)
        return cls(n, frozenset(seen), frozenset(loops))

    @classmethod
    def from_json(cls, data: dict) -> "CellGraph":
        if not isinstance(data, dict) or "n" not in data or "edges" not in data:
            raise GraphError("graph JSON needs keys 'n' and 'edges'")
        return cls.from_edge_list(
            [tuple(e) for e in data["edges"]], n=int(data["n"]), loops=data.get("loops", ())
        )

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "edges": [list(e) for e in self.sorted_edges],
            "loops": sorted(self.loops),
        }

    # -- basic structure --------------------------------------------------

    @cached_property
    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    @cached_property
    def _neighbours(self) -> dict[int, tuple[int, ...]]:
        nb = {v: [] for v in range(1, self.n + 1)}
        for u, v in self.edges:
            nb[u].append(v)
            nb[v].append(u)
        return {v: tuple(sorted(ws)) for v, ws in nb.items()}

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    def _check_vertex(self, v: int) -> None:
        if not 1 <= v <= self.n:
            raise GraphError(f"vertex {v} outside 1..{self.n}")

    def input_set(self, v: int) -> tuple[int, ...]:
        """Neighbours of ``v``; loops are never included."""
        self._check_vertex(v)
        return self._neighbours[v]

    def degree(self, v: int) -> int:
        self._check_vertex(v)
        return len(self._neighbours[v])

    def degrees(self) -> list[int]:
        return [len(self._neighbours[v]) for v in self.vertices]

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def is_regular(self) -> Optional[int]:
        degs = set(self.degrees())
        return degs.pop() if len(degs) == 1 else None

    def is_complete(self) -> bool:
        return len(self.edges) == self.n * (self.n - 1) // 2

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for u, v in self.edges:
            a[u - 1, v - 1] = a[v - 1, u - 1] = 1.0
        return a

    # -- bipartiteness ----------------------------------------------------

    def _two_colour(self):
        colour = {1: 0}
        parent = {1: None}
        queue = deque([1])
        while queue:
            u = queue.popleft()
            for w in self._neighbours[u]:
                if w not in colour:
                    colour[w] = 1 - colour[u]
                    parent[w] = u
                    queue.append(w)
                elif colour[w] == colour[u]:
                    return colour, parent, (u, w)
        return colour, parent, None

    def bipartition(self) -> Optional[Bipartition]:
        """BFS 2-colouring with vertex 1 in ``part1``; ``None`` if not bipartite."""
        if self.loops:
            return None
        colour, _, conflict = self._two_colour()
        if conflict is not None:
            return None
        p1 = frozenset(v for v, c in colour.items() if c == 0)
        p2 = frozenset(v for v, c in colour.items() if c == 1)
        return Bipartition(p1, p2)

    def is_bipartite(self) -> bool:
        return self.bipartition() is not None

    def odd_cycle(self) -> Optional[list[int]]:
        """Some odd cycle as a vertex list, or ``None`` for bipartite graphs.

        A loop counts as a cycle of length one.
        """
        if self.loops:
            return [min(self.loops)]
        colour, parent, conflict = self._two_colour()
        if conflict is None:
            return None
        u, w = conflict

        def path_to_root(x):
            out = []
            while x is not None:
                out.append(x)
                x = parent[x]
            return out

        pu, pw = path_to_root(u), path_to_root(w)
        anc_w = set(pw)
        lca = next(x for x in pu if x in anc_w)
        left = pu[: pu.index(lca) + 1]
        right = pw[: pw.index(lca)]
        return left + right[::-1]

    def is_dm_graph(self) -> Optional[tuple[int, int]]:
        d = self.is_regular()
        bp = self.bipartition()
        if d is None or bp is None or len(bp.part1) != len(bp.part2):
            return None
        return d, len(bp.part1)

    def permuted(self, perm: Sequence[int]) -> "CellGraph":
        """Relabel vertex ``v`` as ``perm[v-1]``."""
        edges = frozenset((perm[u - 1], perm[v - 1]) for u, v in self.edges)
        loops = frozenset(perm[v - 1] for v in self.loops)
        return CellGraph(self.n, edges, loops)

    def automorphisms(self) -> list[tuple[int, ...]]:
        """All automorphisms by brute force; only meant for small fixtures."""
        if self.n > 9:
            raise GraphError("brute-force automorphism search limited to n <= 9")
        degs = self.degrees()
        out = []
        for perm in itertools.permutations(range(1, self.n + 1)):
            if any(degs[i] != degs[perm[i] - 1] for i in range(self.n)):
                continue
            if all(
                (min(perm[u - 1], perm[v - 1]), max(perm[u - 1], perm[v - 1])) in self.edges
                for u, v in self.edges
            ):
                out.append(perm)
        return out


# -- named constructors ----------------------------------------------------


def ring(n: int) -> CellGraph:
    if n < 3:
        raise GraphError("ring needs n >= 3")
    return CellGraph.from_edge_list([(i, i % n + 1) for i in range(1, n + 1)], n=n)


def path(n: int) -> CellGraph:
    if n < 2:
        raise GraphError("path needs n >= 2")
    return CellGraph.from_edge_list([(i, i + 1) for i in range(1, n)], n=n)


def complete(n: int) -> CellGraph:
    if n < 2:
        raise GraphError("complete graph needs n >= 2")
    return CellGraph.from_edge_list(list(itertools.combinations(range(1, n + 1), 2)), n=n)


def complete_bipartite(m: int, n: int) -> CellGraph:
    """K_{m,n} with vertices 1..m on one side and m+1..m+n on the other."""
    if m < 1 or n < 1:
        raise GraphError("complete bipartite graph needs m, n >= 1")
    return CellGraph.from_edge_list(
        [(i, m + j) for i in range(1, m + 1) for j in range(1, n + 1)], n=m + n
    )


def star(leaves: int, center: int = 1) -> CellGraph:
    if leaves < 1:
        raise GraphError("star needs at least one leaf")
    n = leaves + 1
    if not 1 <= center <= n:
        raise GraphError(f"centre {center} outside 1..{n}")
    return CellGraph.from_edge_list([(center, v) for v in range(1, n + 1) if v != center], n=n)


def hypercube(dim: int) -> CellGraph:
    if dim < 1:
        raise GraphError("hypercube needs dim >= 1")
    n = 2**dim
    edges = [(a + 1, (a ^ (1 << b)) + 1) for a in range(n) for b in range(dim) if a < a ^ (1 << b)]
    return CellGraph.from_edge_list(edges, n=n)


def petersen() -> CellGraph:
    outer = [(i, i % 5 + 1) for i in range(1, 6)]
    spokes = [(i, i + 5) for i in range(1, 6)]
    inner = [(6 + i, 6 + (i + 2) % 5) for i in range(5)]
    return CellGraph.from_edge_list(outer + spokes + inner, n=10)


def crown(m: int) -> CellGraph:
    """K_{m,m} minus a perfect matching: vertices 1..m and m+1..2m, i !~ m+i."""
    if m < 3:
        raise GraphError("crown graph needs m >= 3 to be connected")
    return CellGraph.from_edge_list(
        [(i, m + j) for i in range(1, m + 1) for j in range(1, m + 1) if i != j], n=2 * m
    )


FIXTURE_DIR = Path(__file__).parent / "fixtures"


def load_graph(path_or_name) -> CellGraph:
    """Load a graph JSON file, or a bundled fixture by bare name."""
    p = Path(path_or_name)
    if not p.exists():
        cand = FIXTURE_DIR / f"{path_or_name}.json"
        if cand.exists():
            p = cand
        else:
            raise FileNotFoundError(path_or_name)
    text = p.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if exc.lineno - 1 < len(text.splitlines()) else ""
        raise GraphError(
            f"{p}: line {exc.lineno}, column {exc.colno}: {exc.msg}\n    {line}"
        ) from exc
    return CellGraph.from_json(data)
