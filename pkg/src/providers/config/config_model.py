from typing import List, Literal, Optional

from pydantic import BaseModel, Field, PositiveFloat, PositiveInt

# Experiment keys whose file value is a comma-separated list.
LIST_KEYS = ("epsilon", "l", "seeds")

# File keys that are Python keywords are stored under a different field name.
KEY_ALIASES = {"lambda": "lam"}


class ExperimentConfig(BaseModel):
    """A fully validated experiment: data, network, ADMM, privacy and output settings.

    The defaults reproduce the published setup: a 100-node complete graph with
    rho = 0.001, lambda = 0.0001, delta = 1e-5, l = 10 and 10 seeds.
    """

    dataset: Literal["synthetic", "adult", "cache"] = "synthetic"
    adult_path: Optional[str] = None
    cache_path: Optional[str] = None
    synthetic_samples_per_node: PositiveInt = 200
    synthetic_dim: PositiveInt = 10
    synthetic_label_noise: float = Field(0.05, ge=0.0, le=0.5)
    # drives data generation, the train/test split and the node partition
    data_seed: int = 0

    topology: Literal["complete", "ring", "edges"] = "complete"
    edge_list_path: Optional[str] = None
    n: int = Field(100, ge=2)

    rho: float = Field(0.001, gt=0.0)
    lam: float = Field(0.0001, gt=0.0)
    D: float = Field(2.0, gt=0.0)
    t: PositiveInt = 100
    l: List[PositiveInt] = [10]
    epsilon: List[PositiveFloat] = [1.0]
    delta: float = Field(1e-5, gt=0.0, lt=1.0)
    seeds: List[int] = list(range(10))

    noise: bool = True
    projection: bool = True
    minibatch_size: Optional[PositiveInt] = None
    c0: Optional[PositiveFloat] = None
    c2: Optional[PositiveFloat] = None
    beta: Optional[float] = Field(None, ge=0.0)
    eval_mode: Literal["average", "last"] = "average"
    test_fraction: float = Field(0.2, ge=0.0, lt=1.0)
    oracle_tol: PositiveFloat = 1e-8

    workers: PositiveInt = 1
    output_dir: str = "results"

    def cells(self):
        """(epsilon, l, seed) triples in sweep order."""
        return [
            (epsilon, l, seed)
            for epsilon in self.epsilon
            for l in self.l
            for seed in self.seeds
        ]
