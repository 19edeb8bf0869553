import math

import numpy as np
import pytest

from src.exceptions import NonConvergenceError, ParameterError
from src.providers.admm.admm_model import AdmmConfig
from src.providers.dataset.dataset_model import Dataset
from src.providers.metrics.metrics_model import RUN_CSV_COLUMNS, CentralizedOptimum, RunRecord
from src.providers.objective.objective_model import ObjectiveSpec
from tests.conftest import make_partition


def scalar_spec(lam):
    return ObjectiveSpec(lam=lam, n=1, c1=1.0, c2=1.0 + lam, D=2.0)


def test_oracle_single_sample_matches_bisection(oracle_service):
    lam = 5.0
    optimum = oracle_service.solve_centralized([make_partition([[1.0, 0.0]], [1])], scalar_spec(lam))

    # d/dx [log(1 + exp(-x)) + lam x^2 / 2] = lam x - 1 / (1 + exp(x))
    low, high = 0.0, 1.0
    for _ in range(200):
        mid = (low + high) / 2
        if lam * mid - 1.0 / (1.0 + math.exp(mid)) > 0:
            high = mid
        else:
            low = mid
    assert optimum.gradient_norm < 1e-8
    assert optimum.w_star[0] == pytest.approx(low, abs=1e-8)
    assert 0 < optimum.w_star[0] < 0.2
    assert optimum.w_star[1] == pytest.approx(0.0, abs=1e-12)


def test_oracle_symmetric_data_gives_zero(oracle_service):
    a = [0.3, -0.4]
    optimum = oracle_service.solve_centralized([make_partition([a, a], [1, -1])], scalar_spec(0.01))
    np.testing.assert_allclose(optimum.w_star, 0.0, atol=1e-12)


def test_oracle_is_independent_of_start(oracle_service, objective_service, small_instance):
    _, partitions, _ = small_instance
    spec = objective_service.make_spec(lam=0.1, n=len(partitions), D=2.0)
    first = oracle_service.solve_centralized(partitions, spec, tol=1e-8)
    second = oracle_service.solve_centralized(partitions, spec, tol=1e-8, start=np.full(3, 5.0))
    assert np.linalg.norm(first.w_star - second.w_star) < 1e-6
    gradient = sum(objective_service.local_gradient(p, spec, first.w_star) for p in partitions)
    assert np.linalg.norm(gradient) < 1e-8


def test_oracle_requires_regularization(oracle_service):
    with pytest.raises(ParameterError):
        oracle_service.solve_centralized([make_partition([[1.0]], [1])], scalar_spec(0.0))


def test_oracle_reports_non_convergence(oracle_service, small_instance):
    _, partitions, spec = small_instance
    with pytest.raises(NonConvergenceError) as e:
        oracle_service.solve_centralized(partitions, spec, max_iterations=2)
    assert e.value.gradient_norm > 1e-8
    assert e.value.exit_code == 3


def test_oracle_cache(oracle_service, small_instance, tmp_path):
    _, partitions, spec = small_instance
    first = oracle_service.solve_cached(partitions, spec, cache_dir=tmp_path)
    files = list(tmp_path.glob("oracle-*.npz"))
    assert len(files) == 1
    second = oracle_service.solve_cached(partitions, spec, cache_dir=tmp_path)
    np.testing.assert_array_equal(first.w_star, second.w_star)
    assert second.objective_value == first.objective_value


def test_cache_key_depends_on_lambda(oracle_service, objective_service, small_instance):
    _, partitions, spec = small_instance
    other = objective_service.make_spec(lam=0.02, n=spec.n, D=spec.D)
    assert oracle_service.cache_key(partitions, spec, 1e-8) != oracle_service.cache_key(
        partitions, other, 1e-8
    )


def test_utility_metric_at_optimum_is_zero(metrics_service, oracle_service, small_instance):
    graph, partitions, spec = small_instance
    w_star = oracle_service.solve_centralized(partitions, spec).w_star
    excess, feasibility = metrics_service.utility_metric(
        [w_star] * graph.node_count, w_star, 1.0, graph, partitions, spec
    )
    assert excess == pytest.approx(0.0, abs=1e-15)
    assert feasibility == 0.0


def test_feasibility_counts_each_edge_twice(metrics_service, topology_service):
    graph = topology_service.build_complete(2)
    partitions = [make_partition([[1.0, 0.0]], [1], node_id=i) for i in range(2)]
    spec = ObjectiveSpec(lam=0.0, n=2, c1=1.0, c2=1.0, D=2.0)
    _, feasibility = metrics_service.utility_metric(
        [np.array([1.0, 0.0]), np.zeros(2)], np.zeros(2), 1.0, graph, partitions, spec
    )
    assert feasibility == 2.0


def test_utility_metric_matches_brute_force(
    metrics_service, objective_service, oracle_service, small_instance
):
    graph, partitions, spec = small_instance
    w_star = oracle_service.solve_centralized(partitions, spec).w_star
    rng = np.random.default_rng(21)
    models = [rng.normal(size=3) for _ in range(graph.node_count)]
    excess, feasibility = metrics_service.utility_metric(models, w_star, 0.7, graph, partitions, spec)

    expected_excess = sum(
        objective_service.local_objective(partitions[i], spec, models[i])
        for i in range(graph.node_count)
    ) - objective_service.global_objective(partitions, spec, w_star)
    expected_feasibility = 0.7 * sum(
        np.linalg.norm(models[i] - models[j])
        for i in range(graph.node_count)
        for j in graph.neighbors[i]
    )
    assert excess == pytest.approx(expected_excess, rel=1e-12)
    assert excess >= -1e-9
    assert feasibility == pytest.approx(expected_feasibility, rel=1e-12)


def test_utility_metric_rejects_negative_beta(metrics_service, small_instance):
    graph, partitions, spec = small_instance
    with pytest.raises(ParameterError):
        metrics_service.utility_metric(
            [np.zeros(3)] * 4, np.zeros(3), -1.0, graph, partitions, spec
        )


def test_default_beta(metrics_service, topology_service):
    assert metrics_service.default_beta(0.001, topology_service.build_complete(100)) == pytest.approx(
        0.099
    )


def test_accuracy(metrics_service, synthetic_service):
    dataset = synthetic_service.generate_synthetic(300, 4, seed=3)
    assert metrics_service.accuracy([dataset.separator], dataset) == 1.0
    assert metrics_service.accuracy([np.zeros(4)], dataset) == 0.0

    test = Dataset(
        features=np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.5, 0.5]]),
        labels=np.array([1, 1, 1, -1]),
    )
    # scores 1, -1, -1, 0: only the first sample is classified correctly
    assert metrics_service.accuracy([np.array([1.0, -1.0])], test) == 0.25
    # the mean model is used, not each node's model
    assert metrics_service.accuracy([np.array([2.0, 0.0]), np.array([0.0, -2.0])], test) == 0.25


def test_accuracy_needs_test_samples(metrics_service):
    empty = Dataset(features=np.zeros((0, 2)), labels=np.zeros(0, dtype=np.int64))
    with pytest.raises(ParameterError):
        metrics_service.accuracy([np.zeros(2)], empty)


def test_consensus_error(metrics_service):
    assert metrics_service.consensus_error([np.ones(3)] * 4) == 0.0
    assert metrics_service.consensus_error([np.array([1.0, 0.0]), np.array([-1.0, 0.0])]) == 1.0


def test_theoretical_bound_shrinks_with_epsilon(
    metrics_service, privacy_service, small_instance
):
    graph, partitions, spec = small_instance
    cfg = AdmmConfig(rho=0.1, t=50, l=5)
    bounds = [
        metrics_service.theoretical_bound(
            graph, partitions, spec, cfg, privacy_service.make_budget(eps, 1e-5, 50, 5), 0.3
        )
        for eps in (0.5, 1.0, 2.0)
    ]
    assert bounds[0] > bounds[1] > bounds[2] > 0
    noise_free = metrics_service.theoretical_bound(
        graph, partitions, spec, AdmmConfig(rho=0.1, t=50, l=5, noise_enabled=False), None, 0.3
    )
    assert noise_free < bounds[2]


def test_recorder_builds_records(metrics_service, oracle_service, synthetic_service, small_instance):
    graph, partitions, spec = small_instance
    optimum = oracle_service.solve_centralized(partitions, spec)
    test = synthetic_service.generate_synthetic(20, 3, seed=1)
    record = metrics_service.recorder(graph, partitions, spec, optimum, 0.5, test)(
        3, [optimum.w_star] * 4, [np.zeros(3)] * 4
    )
    assert record.k == 3
    assert record.excess_risk == pytest.approx(0.0, abs=1e-15)
    assert record.feasibility == 0.0
    assert 0.0 <= record.accuracy <= 1.0

    last = metrics_service.recorder(graph, partitions, spec, optimum, 0.5, eval_mode="last")(
        3, [optimum.w_star] * 4, [np.zeros(3)] * 4
    )
    assert last.total_risk == pytest.approx(4 * math.log(2.0))
    assert math.isnan(last.accuracy)


def test_recorder_rejects_unknown_eval_mode(metrics_service, small_instance):
    graph, partitions, spec = small_instance
    optimum = CentralizedOptimum(w_star=np.zeros(3), objective_value=0.0, gradient_norm=0.0)
    with pytest.raises(ParameterError):
        metrics_service.recorder(graph, partitions, spec, optimum, 0.5, eval_mode="best")


def test_run_csv_layout(metrics_service, tmp_path):
    records = [
        RunRecord(
            k=k,
            total_risk=1.0 / k,
            excess_risk=0.123456789012345 / k,
            feasibility=0.0,
            consensus_error=0.0,
            accuracy=0.5,
        )
        for k in (1, 2)
    ]
    path = tmp_path / "run.csv"
    metrics_service.write_run_csv(records, path, header_comment="t=2 l=1")
    lines = path.read_text().splitlines()
    assert lines[0] == "# t=2 l=1"
    assert lines[1] == ",".join(RUN_CSV_COLUMNS)
    assert lines[2].split(",")[2] == "0.123456789012345"
    assert len(lines) == 4
    assert [p.name for p in tmp_path.iterdir()] == ["run.csv"]
