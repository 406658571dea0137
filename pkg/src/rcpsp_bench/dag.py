"""Layered-DAG construction with exactly-k non-redundant cross-layer edges.

Nodes are integers 0..n-1 partitioned into ordered layers; callers map
them to task ids.  Edges only run from a lower layer to a higher one and
the edge set is kept equal to its own transitive reduction throughout:
a candidate edge is rejected both when its endpoints are already ordered
and when inserting it would turn an existing edge into a shortcut.
Reachability is maintained incrementally as per-node bitsets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from random import Random


class CapacityError(RuntimeError):
    """k non-redundant edges cannot fit (or the sampler gave up trying)."""


class LayerOrderError(ValueError):
    """An edge was proposed from a layer to the same or an earlier layer."""


@dataclass
class LayeredDag:
    layers: list[list[int]]
    edges: list[tuple[int, int]] = field(default_factory=list)
    # reach[i] has bit j set iff a path i -> j exists (strict reachability)
    reach: list[int] = field(default_factory=list)
    layer_of: list[int] = field(default_factory=list)

    @classmethod
    def empty(cls, layer_sizes: list[int]) -> "LayeredDag":
        layers: list[list[int]] = []
        layer_of: list[int] = []
        nxt = 0
        for li, size in enumerate(layer_sizes):
            if size < 1:
                raise ValueError("layer sizes must be positive")
            layers.append(list(range(nxt, nxt + size)))
            layer_of.extend([li] * size)
            nxt += size
        return cls(layers=layers, reach=[0] * nxt, layer_of=layer_of)

    @property
    def num_nodes(self) -> int:
        return len(self.layer_of)

    def closure(self) -> list[list[bool]]:
        """Reachability as a boolean matrix (row i -> column j)."""
        n = self.num_nodes
        return [[bool(self.reach[i] >> j & 1) for j in range(n)] for i in range(n)]


def add_edge_nonredundant(dag: LayeredDag, i: int, j: int) -> bool:
    """Append edge (i, j) iff the edge set stays a transitive reduction.

    Rejects when j is already reachable from i, and also when some
    existing edge (x, y) with x in ancestors*(i) and y in descendants*(j)
    would become a shortcut once i -> j exists.  On acceptance the
    reachability bitsets are updated in place.
    """
    if dag.layer_of[i] >= dag.layer_of[j]:
        raise LayerOrderError(
            f"edge {i}->{j} does not go to a later layer "
            f"({dag.layer_of[i]} -> {dag.layer_of[j]})"
        )
    reach = dag.reach
    if reach[i] >> j & 1:
        return False
    anc_mask = 1 << i
    for x in range(dag.num_nodes):
        if reach[x] >> i & 1:
            anc_mask |= 1 << x
    desc_mask = reach[j] | (1 << j)
    for x, y in dag.edges:
        if anc_mask >> x & 1 and desc_mask >> y & 1:
            return False
    dag.edges.append((i, j))
    for x in range(dag.num_nodes):
        if anc_mask >> x & 1:
            reach[x] |= desc_mask
    return True


def generate_layered_dag(
    num_layers: int,
    level: int,
    layer_sizes: list[int],
    rng: Random,
    pre_edges: list[tuple[int, int]] | None = None,
) -> LayeredDag:
    """Sample a layered DAG with exactly `level` non-redundant cross edges.

    Candidates are drawn uniformly over ordered layer pairs (a, b) with
    b > a, then uniformly over the pair's node product; rejected samples
    do not count toward `level`.  `pre_edges` are fixed backbone edges
    (e.g. per-rack stage chains) inserted first and excluded from the
    count.  Raises CapacityError when `level` provably cannot fit or
    after 50 * level consecutive rejections.
    """
    if num_layers < 2:
        raise ValueError("need at least 2 layers")
    if level < 1:
        raise ValueError("level must be >= 1")
    if len(layer_sizes) != num_layers:
        raise ValueError("layer_sizes length must equal num_layers")

    dag = LayeredDag.empty(layer_sizes)
    for i, j in pre_edges or []:
        if not add_edge_nonredundant(dag, i, j):
            raise ValueError(f"redundant pre-edge {i}->{j}")

    cross_pairs = 0
    layer_pairs: list[tuple[int, int]] = []
    for a in range(num_layers):
        for b in range(a + 1, num_layers):
            layer_pairs.append((a, b))
            cross_pairs += layer_sizes[a] * layer_sizes[b]
    if level + len(dag.edges) > cross_pairs:
        raise CapacityError(
            f"{level} edges cannot fit: only {cross_pairs} cross-layer pairs"
        )

    budget = 50 * level
    rejected = 0
    accepted = 0
    while accepted < level:
        a, b = layer_pairs[rng.randrange(len(layer_pairs))]
        i = dag.layers[a][rng.randrange(layer_sizes[a])]
        j = dag.layers[b][rng.randrange(layer_sizes[b])]
        if add_edge_nonredundant(dag, i, j):
            accepted += 1
            rejected = 0
        else:
            rejected += 1
            if rejected >= budget:
                raise CapacityError(
                    f"gave up after {budget} consecutive rejections "
                    f"({accepted}/{level} edges placed)"
                )
    return dag


def transitive_closure_reference(edges: list[tuple[int, int]], num_nodes: int) -> list[list[bool]]:
    """Independent closure recomputation (DFS from every node); test oracle."""
    succs: list[list[int]] = [[] for _ in range(num_nodes)]
    for i, j in edges:
        succs[i].append(j)
    closure = [[False] * num_nodes for _ in range(num_nodes)]
    for start in range(num_nodes):
        stack = list(succs[start])
        row = closure[start]
        while stack:
            v = stack.pop()
            if not row[v]:
                row[v] = True
                stack.extend(succs[v])
    return closure


def edge_is_redundant(edges: list[tuple[int, int]], edge: tuple[int, int]) -> bool:
    """True iff the target stays reachable after removing the edge."""
    i, j = edge
    succs: dict[int, list[int]] = {}
    skipped = False
    for x, y in edges:
        if not skipped and (x, y) == edge:
            skipped = True  # remove exactly one occurrence
            continue
        succs.setdefault(x, []).append(y)
    stack = list(succs.get(i, []))
    seen = set()
    while stack:
        v = stack.pop()
        if v == j:
            return True
        if v not in seen:
            seen.add(v)
            stack.extend(succs.get(v, []))
    return False


def default_layer_sizes(m: int, k: int) -> list[int]:
    """Uniform layer sizes with >= 2x consecutive-pair capacity slack.

    The smallest s with (m - 1) * s^2 >= 2k, floored at 2 tasks per
    layer, so the bipartite capacity between consecutive layers alone
    can absorb k edges twice over.
    """
    if m < 2 or k < 1:
        raise ValueError("need m >= 2 and k >= 1")
    s = 2
    while (m - 1) * s * s < 2 * k:
        s += 1
    return [s] * m
