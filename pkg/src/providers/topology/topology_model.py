from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

import networkx as nx


@dataclass(frozen=True)
class Graph:
    """Undirected communication graph over nodes 0..node_count-1.

    `neighbors[i]` is sorted ascending; neighbor sums iterate in that order.
    """

    node_count: int
    neighbors: Tuple[Tuple[int, ...], ...]

    @classmethod
    def from_adjacency(cls, adjacency: Sequence[Sequence[int]]) -> "Graph":
        return cls(
            node_count=len(adjacency),
            neighbors=tuple(tuple(sorted(set(int(j) for j in row))) for row in adjacency),
        )

    @classmethod
    def from_networkx(cls, graph: nx.Graph) -> "Graph":
        nodes = sorted(graph.nodes())
        return cls.from_adjacency([list(graph.neighbors(node)) for node in nodes])

    def degree(self, node: int) -> int:
        return len(self.neighbors[node])

    def max_degree(self) -> int:
        return max((len(row) for row in self.neighbors), default=0)

    def directed_edges(self) -> Iterator[Tuple[int, int]]:
        for i, row in enumerate(self.neighbors):
            for j in row:
                yield i, j

    def edge_count(self) -> int:
        """Number of undirected edges, assuming the adjacency is symmetric."""
        return sum(len(row) for row in self.neighbors) // 2

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.node_count))
        graph.add_edges_from(self.directed_edges())
        return graph
