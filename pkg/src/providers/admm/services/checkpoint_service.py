from pathlib import Path
from typing import List, Tuple

import numpy as np
from nest.core import Injectable

from src.atomic_io import atomic_path
from src.exceptions import ProtocolError
from src.providers.admm.admm_model import NodeState
from src.providers.logger.logger_service import Logger
from src.providers.topology.topology_model import Graph

CHECKPOINT_VERSION = 1
_VECTORS = ("w_inner", "w_prev_broadcast", "dual", "running_average")


def _format(vector: np.ndarray) -> str:
    return " ".join(f"{value:.17g}" for value in vector)


@Injectable()
class CheckpointService:
    """Text checkpoints of every node's state after a completed outer iteration.

    Layout: a "dp-admm-checkpoint v=<version> k=<k> n=<n> d=<d>" header, then per
    node a "node <i> count=<c> steps=<s>" line followed by one line per vector.
    """

    def __init__(self, logger: Logger):
        self.logger = logger

    def save_checkpoint(self, states: List[NodeState], k: int, path):
        d = states[0].dimension if states else 0
        lines = [f"dp-admm-checkpoint v={CHECKPOINT_VERSION} k={k} n={len(states)} d={d}"]
        for state in states:
            lines.append(f"node {state.node_id} count={state.average_count} steps={state.steps}")
            lines.extend(_format(getattr(state, name)) for name in _VECTORS)
        with atomic_path(path) as tmp:
            tmp.write_text("\n".join(lines) + "\n")
        self.logger.info(f"Checkpoint k={k} written to {path}")

    def load_checkpoint(self, path, graph: Graph) -> Tuple[int, List[NodeState]]:
        try:
            return self._load(path, graph)
        except ProtocolError as e:
            self.logger.error(f"Checkpoint {path} rejected: {e}")
            raise
        except (OSError, ValueError, KeyError) as e:
            self.logger.error(f"Checkpoint {path} is unreadable: {e!r}")
            raise ProtocolError(f"checkpoint {path} is unreadable: {e}") from e

    def _load(self, path, graph: Graph) -> Tuple[int, List[NodeState]]:
        lines = Path(path).read_text().splitlines()
        header = self._fields(lines[0]) if lines else {}
        if not lines or not lines[0].startswith("dp-admm-checkpoint"):
            raise ProtocolError(f"{path} is not a checkpoint")
        if int(header.get("v", -1)) != CHECKPOINT_VERSION:
            raise ProtocolError(f"unsupported checkpoint version {header.get('v')}")
        k, n, d = int(header["k"]), int(header["n"]), int(header["d"])
        if n != graph.node_count:
            raise ProtocolError(f"checkpoint has {n} nodes, graph has {graph.node_count}")

        block = 1 + len(_VECTORS)
        if len(lines) != 1 + n * block:
            raise ProtocolError(f"checkpoint {path} is truncated")

        states = []
        for i in range(n):
            offset = 1 + i * block
            meta = self._fields(lines[offset])
            vectors = {
                name: np.array([float(v) for v in lines[offset + 1 + j].split()])
                for j, name in enumerate(_VECTORS)
            }
            if any(v.shape != (d,) for v in vectors.values()):
                raise ProtocolError(f"checkpoint node {i} has vectors of the wrong dimension")
            states.append(
                NodeState(
                    node_id=i,
                    neighbors=graph.neighbors[i],
                    average_count=int(meta["count"]),
                    steps=int(meta["steps"]),
                    **vectors,
                )
            )
        for state in states:
            broadcasts = {s.node_id: s.w_prev_broadcast for s in states}
            state.receive_broadcasts(state.w_prev_broadcast, broadcasts)
        return k, states

    @staticmethod
    def _fields(line: str) -> dict:
        return dict(item.split("=", 1) for item in line.split() if "=" in item)
