"""Tests for standardization, the registry, and the drift state machine."""

import numpy as np
import pytest

from driftbench.detector import (
    DetectorConfig,
    DistributionRegistry,
    DriftGanDetector,
    classify_batch,
    historical_sample,
    standardize,
    train_gan,
)
from driftbench.streams import default_concepts


# -- standardization ----------------------------------------------------------


def test_standardize_oracle():
    out = standardize([1.0, 2.0, 3.0])
    assert np.allclose(out, [-1.224744871, 0.0, 1.224744871])


def test_standardize_zero_mean_unit_population_sigma():
    rng = np.random.default_rng(0)
    for _ in range(20):
        out = standardize(rng.normal(5.0, 3.0, size=8))
        assert abs(out.mean()) < 1e-12
        assert abs(out.std() - 1.0) < 1e-12


def test_standardize_constant_vector_maps_to_zeros():
    assert np.array_equal(standardize([4.0, 4.0, 4.0]), np.zeros(3))


def test_standardize_idempotent():
    x = np.array([3.0, -1.0, 0.5, 2.0])
    once = standardize(x)
    assert np.allclose(standardize(once), once)


def test_standardize_kills_shift_and_scale():
    x = np.array([1.0, 5.0, -2.0, 0.0])
    assert np.allclose(standardize(x), standardize(3.0 * x + 7.0))


# -- registry and sampling ----------------------------------------------------


def window(seed=0, n=8, d=4):
    rng = np.random.default_rng(seed)
    return [standardize(v) for v in rng.normal(size=(n, d))]


def test_registry_assigns_dense_ids():
    reg = DistributionRegistry(cap=10)
    assert reg.add(window(0)) == 1
    assert reg.add(window(1)) == 2
    assert len(reg) == 2
    assert reg.get(1).dist_id == 1
    with pytest.raises(KeyError):
        reg.get(3)
    with pytest.raises(KeyError):
        reg.get(0)


def test_exemplar_cap_evicts_oldest():
    reg = DistributionRegistry(cap=3)
    reg.add(window(0))
    for i in range(5):
        reg.get(1).add_exemplar([float(i)], i % 2)
    stored = [int(x[0]) for x, _ in reg.get(1).exemplars]
    assert stored == [2, 3, 4]


def test_historical_sample_fractions():
    reg = DistributionRegistry(cap=100)
    reg.add(window(0))
    for i in range(10):
        reg.get(1).add_exemplar([float(i)], 0)
    rng = np.random.default_rng(0)
    assert len(historical_sample(reg, 1, 1.0, rng)) == 10
    assert historical_sample(reg, 1, 0.0, rng) == []
    half = historical_sample(reg, 1, 0.5, rng)
    assert len(half) == 5  # ceil(0.5 * 10)
    # sampled without replacement
    values = [x[0] for x, _ in half]
    assert len(set(values)) == 5


def test_historical_sample_ceils_small_fractions():
    reg = DistributionRegistry(cap=100)
    reg.add(window(0))
    for i in range(3):
        reg.get(1).add_exemplar([float(i)], 0)
    rng = np.random.default_rng(0)
    assert len(historical_sample(reg, 1, 0.1, rng)) == 1


# -- batch classification and the consensus rule ------------------------------


class StubDiscriminator:
    """Maps each input row through a fixed function to per-class scores."""

    def __init__(self, id_of_row, n_out):
        self.id_of_row = id_of_row
        self.n_out = n_out

    @property
    def output_size(self):
        return self.n_out

    def forward(self, batch):
        out = np.zeros((len(batch), self.n_out))
        for i, row in enumerate(batch):
            out[i, self.id_of_row(row)] = 1.0
        return out


def test_classify_batch_ties_resolve_to_lowest_id():
    stub = StubDiscriminator(lambda row: 0, 3)
    ties = np.zeros((2, 3))  # all-equal scores
    stub.forward = lambda batch: np.ones((len(batch), 3))
    assert classify_batch(stub, ties) == [0, 0]


def detector_with_stub(id_of_row, n_registered=2, current=1):
    config = DetectorConfig()
    det = DriftGanDetector(config)
    for seed in range(n_registered):
        det.registry.add(window(seed, n=config.rho))
    det.registry.current = current
    det.discriminator = StubDiscriminator(id_of_row, 1 + n_registered)
    det.instances_seen = config.rho
    return det


def test_detect_unanimous_current_is_not_drift():
    det = detector_with_stub(lambda row: 1, current=1)
    decision = det.detect([np.zeros(4)] * 100, 199)
    assert decision.kind == "none" and not decision.is_drift
    assert det.events == []


def test_detect_split_batch_is_not_drift():
    calls = iter(range(10**6))
    det = detector_with_stub(lambda row: next(calls) % 2, current=1)
    decision = det.detect([np.zeros(4)] * 100, 199)
    assert decision.kind == "none"
    assert det.registry.current == 1


def test_detect_unanimous_known_id_is_recurring():
    det = detector_with_stub(lambda row: 2, current=1)
    decision = det.detect([np.zeros(4)] * 100, 199)
    assert decision.kind == "recurring" and decision.dist_id == 2
    assert det.registry.current == 2
    assert [(e.kind, e.dist_id) for e in det.events] == [("recurring", 2)]


def test_detect_unanimous_unseen_registers_new(monkeypatch):
    det = detector_with_stub(lambda row: 0, current=1)
    registered = []
    monkeypatch.setattr(det, "register_distribution",
                        lambda w: registered.append(list(w)) or 3)
    decision = det.detect([np.zeros(4)] * 100, 199)
    assert decision.kind == "new" and decision.dist_id == 3
    assert len(registered) == 1 and len(registered[0]) == 100
    assert [(e.kind, e.dist_id) for e in det.events] == [("new", 3)]


def test_detect_small_batch_buffers_until_rho(monkeypatch):
    config = DetectorConfig(rho=10, batch_size=5, seq_len=3)
    det = DriftGanDetector(config)
    det.registry.add(window(0, n=10))
    det.registry.current = 1
    det.discriminator = StubDiscriminator(lambda row: 0, 2)
    det.instances_seen = 10
    registered = []
    monkeypatch.setattr(det, "register_distribution",
                        lambda w: registered.append(list(w)) or 2)
    rng = np.random.default_rng(1)
    decisions = [det.observe(rng.normal(size=4)) for _ in range(5)]
    assert decisions[-1].kind == "new"
    assert registered == []  # five vectors are not enough for a window yet
    for _ in range(5):
        det.observe(rng.normal(size=4))
    assert len(registered) == 1 and len(registered[0]) == 10


def test_observe_requires_initialization():
    det = DriftGanDetector(DetectorConfig())
    with pytest.raises(RuntimeError):
        det.observe(np.zeros(4))


def test_config_validation():
    DetectorConfig().validate()
    with pytest.raises(ValueError):
        DetectorConfig(rho=4, seq_len=4).validate()
    with pytest.raises(ValueError):
        DetectorConfig(batch_size=0).validate()
    with pytest.raises(ValueError):
        DetectorConfig(historical_fraction=1.5).validate()
    with pytest.raises(ValueError):
        DetectorConfig(per_dist_cap=0).validate()
    with pytest.raises(ValueError):
        DetectorConfig(disc_steps=0).validate()


# -- GAN training (single-seed smoke; the full audit runs in acceptance) ------


def concept_window(name, seed, n=100):
    concept = default_concepts()[name]
    feats, _ = concept.sample(np.random.default_rng(seed), n)
    return [standardize(v) for v in feats]


def test_train_gan_separates_real_from_generated():
    config = DetectorConfig(seed=0)
    registry = DistributionRegistry(config.per_dist_cap)
    registry.add(concept_window("A", seed=0, n=config.rho))
    registry.current = 1
    rng = np.random.default_rng(0)
    generator, discriminator = train_gan(registry, config, rng)

    real = np.array(registry.get(1).raw_window)
    real_rate = np.mean(np.array(classify_batch(discriminator, real)) == 1)
    assert real_rate >= 0.9

    seqs = np.array([np.concatenate(registry.get(1).raw_window[i:i + 4])
                     for i in range(config.rho - 4)])
    fake = generator.forward(seqs)
    fake_rate = np.mean(np.array(classify_batch(discriminator, fake)) == 0)
    assert fake_rate >= 0.9

    # vectors from a concept that was never seen must map to the unseen id
    unseen = np.array(concept_window("B", seed=50, n=200))
    unseen_rate = np.mean(np.array(classify_batch(discriminator, unseen)) == 0)
    assert unseen_rate >= 0.9


def test_train_gan_rejects_empty_or_short_registry():
    config = DetectorConfig()
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        train_gan(DistributionRegistry(10), config, rng)
    registry = DistributionRegistry(10)
    registry.add(window(0, n=3))  # shorter than seq_len + 1
    with pytest.raises(ValueError):
        train_gan(registry, config, rng)
