from pathlib import Path
from typing import Optional

import networkx as nx
from nest.core import Injectable

from src.exceptions import TopologyError
from src.providers.logger.logger_service import Logger
from src.providers.topology.topology_model import Graph


@Injectable()
class TopologyService:
    def __init__(self, logger: Logger):
        self.logger = logger

    def build_complete(self, n: int) -> Graph:
        if n < 2:
            raise TopologyError(f"complete graph requires n >= 2, got {n}")
        graph = Graph.from_networkx(nx.complete_graph(n))
        self.validate(graph)
        return graph

    def build_ring(self, n: int) -> Graph:
        if n < 3:
            raise TopologyError(f"ring requires n >= 3, got {n}")
        graph = Graph.from_networkx(nx.cycle_graph(n))
        self.validate(graph)
        return graph

    def load_edge_list(self, path, n: Optional[int] = None) -> Graph:
        """
        Reads "i j" pairs, one per line, 0-based. Duplicate and reversed pairs
        collapse to one undirected edge. `n` pads isolated trailing nodes.
        """
        try:
            text = Path(path).read_text()
        except OSError as e:
            self.logger.error(f"Cannot read edge list {path}: {e}")
            raise TopologyError(
                f"cannot read edge list {path}: {e.strerror or e}", reason="parse"
            ) from e
        try:
            result = self._parse_edge_list(path, text, n)
        except TopologyError as e:
            self.logger.error(f"Edge list {path} rejected: {e}")
            raise
        self.logger.info(
            f"Loaded topology from {path}: {result.node_count} nodes, {result.edge_count()} edges"
        )
        return result

    def _parse_edge_list(self, path, text: str, n: Optional[int]) -> Graph:
        graph = nx.Graph()
        for line_number, line in enumerate(text.splitlines(), start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 2:
                raise TopologyError(
                    f"{path}:{line_number}: expected 'i j', got {line!r}", reason="parse"
                )
            try:
                i, j = int(fields[0]), int(fields[1])
            except ValueError:
                raise TopologyError(
                    f"{path}:{line_number}: node indices must be integers", reason="parse"
                )
            if i < 0 or j < 0:
                raise TopologyError(
                    f"{path}:{line_number}: negative node index", reason="parse"
                )
            graph.add_edge(i, j)

        node_count = max(graph.nodes(), default=-1) + 1
        if n is not None:
            if n < node_count:
                raise TopologyError(
                    f"edge list references node {node_count - 1} but n = {n}"
                )
            node_count = n
        graph.add_nodes_from(range(node_count))

        result = Graph.from_networkx(graph)
        self._check(result)
        return result

    def validate(self, g: Graph) -> bool:
        """Returns True when the graph is symmetric, loop-free and connected; raises otherwise."""
        try:
            return self._check(g)
        except TopologyError as e:
            self.logger.error(f"Invalid topology ({e.reason}): {e}")
            raise

    @staticmethod
    def _check(g: Graph) -> bool:
        if g.node_count < 1 or len(g.neighbors) != g.node_count:
            raise TopologyError(
                f"graph declares {g.node_count} nodes but has {len(g.neighbors)} neighbor lists"
            )
        for i, row in enumerate(g.neighbors):
            for j in row:
                if not 0 <= j < g.node_count:
                    raise TopologyError(f"node {i} lists unknown neighbor {j}")
                if i == j:
                    raise TopologyError(f"node {i} has a self-loop", reason="self-loop")
                if i not in g.neighbors[j]:
                    raise TopologyError(
                        f"edge {i}->{j} has no reverse edge {j}->{i}", reason="asymmetry"
                    )

        components = nx.number_connected_components(g.to_networkx())
        if components != 1:
            raise TopologyError(
                f"graph has {components} connected components", reason="disconnection"
            )
        return True
