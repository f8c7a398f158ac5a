"""
Transfer across tuning tasks: ranking loss, RGPE weights, workload mapping
"""
import numpy as np
import pytest

from backend.tuning_modules.datastore import write_trajectory
from backend.tuning_modules.errors import TransferError
from backend.tuning_modules.models import History, Observation, Sense, Status
from backend.tuning_modules.optimize import tune
from backend.tuning_modules.space import lhs_sample, random_sample
from backend.tuning_modules.surrogate import SurrogateFamily, fit_surrogate
from backend.tuning_modules.transfer import (
    NOT_SURPASSED,
    BaseTask,
    EnsembleModel,
    SourceTask,
    TransferContext,
    TransferMode,
    load_source_archive,
    misranked_pairs,
    ranking_loss,
    rgpe_predict,
    rgpe_weights,
    steps_to_best,
    steps_to_reach,
    transfer_pe,
    transfer_speedup,
    workload_map,
)


class FixedModel:
    """Predicts a stored vector regardless of input"""

    def __init__(self, mean, var=0.0):
        self.mean = np.asarray(mean, dtype=float)
        self.var = var

    def predict(self, configs):
        mean = np.resize(self.mean, len(configs))
        return mean, np.full(len(configs), self.var)

    def loo_predict(self):
        return self.mean, np.full(len(self.mean), self.var)


def _history(values, sense=Sense.MINIMIZE, statuses=None):
    history = History(sense)
    statuses = statuses or [Status.OK] * len(values)
    for i, (value, status) in enumerate(zip(values, statuses)):
        history.append(Observation({"x": float(i)}, float(value), status, i))
    return history


def _base(task_id, model=None, profile=None):
    return BaseTask(task_id=task_id, history=_history([1.0]), model=model or FixedModel([0.0]),
                    metrics_profile=None if profile is None else np.asarray(profile, dtype=float))


def _objective(config):
    penalty = {"a": 1.0, "b": 0.0, "c": 2.0}[config["policy"]]
    return (config["buffer_mb"] - 7.0) ** 2 / 10.0 + abs(config["workers"] - 2) + penalty


# Ranking loss

def test_misranked_pairs_examples():
    y = np.array([1.0, 2.0, 3.0])
    assert misranked_pairs(np.array([3.0, 2.0, 1.0]), y) == 6
    assert misranked_pairs(np.array([5.0, 5.0, 5.0]), y) == 3
    assert misranked_pairs(np.array([10.0, 20.0, 30.0]), y) == 0


def _misranked_by_enumeration(predictions, values):
    count = 0
    for j in range(len(values)):
        for k in range(len(values)):
            if (predictions[j] <= predictions[k]) != (values[j] <= values[k]):
                count += 1
    return count


def test_ranking_loss_matches_enumeration_on_random_instances():
    rng = np.random.default_rng(5)
    for instance in range(100):
        n = int(rng.integers(2, 31))
        values = rng.integers(0, 8, size=n).astype(float)
        if instance % 10 == 0:
            predictions = np.full(n, 1.5)
        elif instance % 10 == 1:
            predictions = -values
        else:
            predictions = rng.integers(0, 8, size=n).astype(float)
        history = _history(values)
        assert ranking_loss(FixedModel(predictions), history) == _misranked_by_enumeration(predictions, values)


def test_ranking_loss_follows_the_sense():
    values = np.array([1.0, 2.0, 3.0])
    assert ranking_loss(FixedModel(-values), _history(values, Sense.MAXIMIZE)) == 0
    assert ranking_loss(FixedModel(values), _history(values, Sense.MAXIMIZE)) == 6


# RGPE

def test_rgpe_weights_favor_the_well_ranked_base():
    target = _history([1.0, 2.0, 3.0, 4.0, 5.0])
    good = _base("good", FixedModel([1.0, 2.0, 3.0, 4.0, 5.0]))
    weights = rgpe_weights([good], target, FixedModel([5.0, 4.0, 3.0, 2.0, 1.0]), samples=50, seed=0)
    assert weights.shape == (2,)
    assert weights.sum() == pytest.approx(1.0)
    assert weights[0] > 0.9


def test_rgpe_weights_without_bases():
    target = _history([1.0, 2.0, 3.0])
    assert rgpe_weights([], target, FixedModel([1.0, 2.0, 3.0])).tolist() == [1.0]


def test_rgpe_weights_need_three_observations():
    with pytest.raises(TransferError):
        rgpe_weights([], _history([1.0, 2.0]), FixedModel([1.0, 2.0]))


@pytest.mark.parametrize("seed", range(10))
def test_perfect_base_dominates_a_random_target(seed):
    values = np.arange(1.0, 21.0)
    target = _history(values)
    base = _base("perfect", FixedModel(2.0 * values + 1.0))
    noise = FixedModel(np.random.default_rng(seed).normal(size=20))
    weights = rgpe_weights([base], target, noise, samples=100, seed=seed)
    assert np.all(weights >= 0)
    assert abs(weights.sum() - 1.0) <= 1e-9
    assert weights[0] >= 0.9


def test_rgpe_weights_are_deterministic_per_seed():
    values = np.array([3.0, 1.0, 4.0, 1.5, 5.0, 9.0])
    bases = [_base("a", FixedModel(values[::-1])), _base("b", FixedModel(values + 0.1))]
    target_model = FixedModel([2.0, 7.0, 1.0, 8.0, 2.0, 8.0])
    first = rgpe_weights(bases, _history(values), target_model, samples=30, seed=4)
    second = rgpe_weights(bases, _history(values), target_model, samples=30, seed=4)
    assert np.array_equal(first, second)


def test_zero_source_ensemble_is_the_target_gp(mixed_space, small_settings):
    configs = lhs_sample(mixed_space, 8, 3)
    history = History(Sense.MINIMIZE)
    for i, config in enumerate(configs):
        history.append(Observation(config, _objective(config), Status.OK, i))
    model = fit_surrogate(SurrogateFamily.GP_MIXED, mixed_space, configs, history.values(), seed=0,
                          settings=small_settings)
    ensemble = EnsembleModel((model,), rgpe_weights([], history, model))
    queries = random_sample(mixed_space, 10, seed=1)
    mean, var = rgpe_predict(ensemble, queries)
    expected_mean, expected_var = model.predict(queries)
    assert np.array_equal(mean, expected_mean)
    assert np.array_equal(var, expected_var)


def test_rgpe_predict_mixes_members():
    ensemble = EnsembleModel((FixedModel([2.0], 1.0), FixedModel([4.0], 3.0)), np.array([0.5, 0.5]))
    mean, var = rgpe_predict(ensemble, {"x": 0.0})
    assert (mean, var) == (3.0, 2.0)


def test_single_member_ensemble_is_the_member():
    ensemble = EnsembleModel((FixedModel([1.5, -0.5], 0.2),), np.array([1.0]))
    mean, var = rgpe_predict(ensemble, [{"x": 0.0}, {"x": 1.0}])
    assert mean.tolist() == [1.5, -0.5]
    assert var.tolist() == pytest.approx([0.2, 0.2])


def test_ensemble_rejects_bad_weights():
    with pytest.raises(TransferError):
        EnsembleModel((FixedModel([1.0]),), np.array([0.5, 0.5]))
    with pytest.raises(TransferError):
        EnsembleModel((FixedModel([1.0]), FixedModel([2.0])), np.array([0.7, 0.7]))


# Workload mapping

def test_workload_map_picks_nearest_profile():
    sources = [_base("near", profile=[1.0, 0.0]), _base("far", profile=[3.0, 4.0])]
    assert workload_map([0.0, 0.0], sources).task_id == "near"


def test_workload_map_errors():
    with pytest.raises(TransferError):
        workload_map([0.0], [])
    with pytest.raises(TransferError):
        workload_map([0.0, 0.0], [_base("short", profile=[1.0])])
    with pytest.raises(TransferError):
        workload_map([0.0], [_base("none")])


# Quality metrics

def test_transfer_pe_examples():
    assert transfer_pe(120, 100) == pytest.approx(0.2)
    assert transfer_pe(80, 100) == pytest.approx(-0.2)
    with pytest.raises(TransferError):
        transfer_pe(1.0, 0.0)


def test_transfer_speedup_examples():
    assert transfer_speedup(200, 50) == 4.0
    assert transfer_speedup(200, None) == NOT_SURPASSED


def test_steps_to_reach_and_best():
    history = _history([5.0, 3.0, 4.0, 1.0, 1.0], statuses=[Status.OK, Status.FAILED, Status.OK, Status.OK,
                                                              Status.OK])
    assert steps_to_reach(history, 4.0) == 3
    assert steps_to_reach(history, 0.5) is None
    assert steps_to_best(history) == 4


# Sessions with a source archive

@pytest.fixture
def sources(mixed_space, small_settings):
    tasks = []
    for i, shift in enumerate((0.0, 3.0)):
        session = tune(mixed_space, lambda c, s=shift: _objective(c) + s * c["workers"], "random", "minimize",
                       budget=8, seed=i, settings=small_settings)
        tasks.append(SourceTask(task_id=f"task{i}", history=session.history,
                                metrics_profile=np.array([float(i), 1.0 + i])))
    return tasks


@pytest.mark.parametrize("kind", ["vanilla_bo", "smac"])
def test_rgpe_session(mixed_space, small_settings, sources, kind):
    context = TransferContext(TransferMode.RGPE, sources)
    session = tune(mixed_space, _objective, kind, "minimize", budget=7, seed=0, settings=small_settings,
                   transfer=context)
    assert len(session.history) == 7
    assert all(mixed_space.is_valid(c) for c in session.history.configs())


def test_mapping_session(mixed_space, small_settings, sources):
    context = TransferContext("mapping", sources, target_profile=np.array([0.1, 1.2]))
    session = tune(mixed_space, _objective, "mixed_bo", "minimize", budget=6, seed=0, settings=small_settings,
                   transfer=context)
    assert len(session.history) == 6


def test_transfer_context_needs_sources():
    with pytest.raises(TransferError):
        TransferContext(TransferMode.RGPE, [])


def test_load_source_archive(tmp_path, mixed_space):
    history = History(Sense.MINIMIZE)
    for i, config in enumerate(lhs_sample(mixed_space, 3, 0)):
        history.append(Observation(config, float(i), Status.OK, i))
    write_trajectory(history, mixed_space, tmp_path / "oltp.csv")
    (tmp_path / "oltp.json").write_text('{"metrics": [0.5, 2.0]}')
    write_trajectory(history, mixed_space, tmp_path / "olap.csv")

    tasks = load_source_archive(tmp_path, mixed_space, Sense.MINIMIZE)
    assert [t.task_id for t in tasks] == ["olap", "oltp"]
    assert tasks[0].metrics_profile is None
    assert tasks[1].metrics_profile.tolist() == [0.5, 2.0]
    assert len(tasks[1].history) == 3


def test_empty_source_archive(tmp_path, mixed_space):
    with pytest.raises(TransferError):
        load_source_archive(tmp_path, mixed_space, Sense.MINIMIZE)
