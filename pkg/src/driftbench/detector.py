"""GAN-based recurring-drift detector.

A generator learns to predict the next feature vector from a short
sequence; a multi-class discriminator maps each vector to one of the
distributions seen so far (ids 1..n) or to the reserved "unseen" class
(id 0). A drift is signalled only when a whole batch unanimously maps
to a single id different from the current one: a known id means a
recurring drift, id 0 means a brand-new distribution, which grows the
discriminator by one output and triggers a full GAN retrain.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .nn import (
    AdadeltaOptimizer,
    Network,
    TrainingDivergedError,
    _backward,
    apply_gradients,
    batch_loss,
    extend_output_layer,
    loss_gradients,
    train_step,
)

log = logging.getLogger("driftbench.detector")

GENERATOR_HIDDEN = (128, 4096)
DISCRIMINATOR_HIDDEN = (1024, 1024)


@dataclass
class DetectorConfig:
    rho: int = 100                     # training window size
    batch_size: int = 100              # consensus batch size
    seq_len: int = 4                   # generator input sequence length
    historical_fraction: float = 1.0   # share of stored data reused on recurrence
    per_dist_cap: int = 10000          # stored exemplars per distribution
    seed: int = 0
    gan_minibatch: int = 16
    gan_max_epochs: int = 200
    disc_loss_threshold: float = 0.1
    gan_adadelta_epsilon: float = 1e-4
    disc_steps: int = 3            # discriminator updates per generator update
    ce_grad_clip: float = 0.5      # CE grad norm cap, relative to the MSE grad
    probe_radius_scale: float = 6.0  # probe keep-out, in mean NN distances
    real_jitter_scale: float = 2.5   # window-vector jitter, in mean NN distances

    def validate(self) -> None:
        if self.rho < self.seq_len + 1:
            raise ValueError("rho must be at least seq_len + 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.historical_fraction <= 1.0:
            raise ValueError("historical_fraction must be in [0, 1]")
        if self.seq_len < 1:
            raise ValueError("seq_len must be >= 1")
        if self.per_dist_cap < 1:
            raise ValueError("per_dist_cap must be >= 1")
        if self.disc_steps < 1:
            raise ValueError("disc_steps must be >= 1")


@dataclass
class DriftEvent:
    instance_index: int
    kind: str  # "new" | "recurring"
    dist_id: int


@dataclass
class DriftDecision:
    kind: str  # "none" | "new" | "recurring"
    dist_id: int | None
    instance_index: int

    @property
    def is_drift(self) -> bool:
        return self.kind != "none"


class DistributionRecord:
    """One seen distribution: its GAN training window and labeled exemplars."""

    def __init__(self, dist_id: int, raw_window, cap: int):
        self.dist_id = dist_id
        self.raw_window = [np.asarray(v, dtype=float) for v in raw_window]
        self.exemplars: deque = deque(maxlen=cap)

    def add_exemplar(self, features, label) -> None:
        self.exemplars.append((np.asarray(features, dtype=float), int(label)))


class DistributionRegistry:
    """Ordered set of seen distributions; ids are dense 1..n, 0 = unseen."""

    def __init__(self, cap: int):
        self.cap = cap
        self.records: list[DistributionRecord] = []
        self.current = 0

    def __len__(self) -> int:
        return len(self.records)

    def add(self, raw_window) -> int:
        dist_id = len(self.records) + 1
        self.records.append(DistributionRecord(dist_id, raw_window, self.cap))
        return dist_id

    def get(self, dist_id: int) -> DistributionRecord:
        if not 1 <= dist_id <= len(self.records):
            raise KeyError(f"unknown distribution id {dist_id}")
        return self.records[dist_id - 1]


def standardize(x) -> np.ndarray:
    """Per-vector standardization (population sigma); constant vectors map to 0."""
    arr = np.asarray(x, dtype=float)
    sigma = arr.std()
    if sigma == 0.0:
        return np.zeros_like(arr)
    return (arr - arr.mean()) / sigma


def historical_sample(registry: DistributionRegistry, dist_id: int,
                      fraction: float, rng) -> list:
    """Uniform sample without replacement of ceil(fraction * stored) exemplars."""
    record = registry.get(dist_id)
    exemplars = list(record.exemplars)
    k = int(np.ceil(fraction * len(exemplars)))
    if k <= 0:
        return []
    idx = rng.choice(len(exemplars), size=k, replace=False)
    return [exemplars[i] for i in idx]


def classify_batch(discriminator: Network, batch) -> list[int]:
    """Argmax distribution id per vector (ties resolve to the lowest id)."""
    arr = np.atleast_2d(np.asarray(batch, dtype=float))
    out = discriminator.forward(arr)
    return [int(i) for i in np.argmax(out, axis=1)]


# ---------------------------------------------------------------------------
# GAN training


def _sequence_dataset(registry: DistributionRegistry, seq_len: int):
    """Sliding sequences within each record's window (never across records)."""
    seqs, nexts, ids = [], [], []
    for record in registry.records:
        window = record.raw_window
        for i in range(len(window) - seq_len):
            seqs.append(np.concatenate(window[i:i + seq_len]))
            nexts.append(window[i + seq_len])
            ids.append(record.dist_id)
    return np.array(seqs), np.array(nexts), np.array(ids)


def _real_dataset(registry: DistributionRegistry):
    vecs, ids = [], []
    for record in registry.records:
        vecs.extend(record.raw_window)
        ids.extend([record.dist_id] * len(record.raw_window))
    return np.array(vecs), np.array(ids)


def train_gan(registry: DistributionRegistry, config: DetectorConfig, rng,
              generator: Network | None = None,
              discriminator: Network | None = None):
    """Train a generator/discriminator pair on every stored window.

    Compatible existing networks (e.g. a discriminator whose output layer
    was just extended) continue training in place; otherwise fresh networks
    are built. On a divergent loss the pair is rebuilt and trained once
    more from a fresh initialization; a second divergence is a hard error.
    """
    if len(registry) == 0:
        raise ValueError("registry is empty")
    for record in registry.records:
        if len(record.raw_window) < config.seq_len + 1:
            raise ValueError("every stored window needs at least seq_len + 1 vectors")
    last_error = None
    for attempt in range(2):
        try:
            return _train_gan_once(registry, config, rng, generator, discriminator)
        except TrainingDivergedError as err:
            log.warning("GAN training diverged (attempt %d): %s", attempt + 1, err)
            last_error = err
            generator = discriminator = None  # retry from a fresh init
    raise TrainingDivergedError(
        f"GAN training diverged twice; registry size {len(registry)}"
    ) from last_error


def _sample_probes(rng, n, real_vecs, radius):
    """Standardized Gaussian probes kept away from every real vector.

    The probes stand in for the unseen class: without them the
    discriminator's label-0 region is shaped only by generated vectors and
    extrapolates arbitrarily elsewhere. Candidates closer than `radius` to
    any real vector are rejected so the probes never poison real regions.
    """
    d = real_vecs.shape[1]
    kept = []
    for _ in range(8):  # oversample a few rounds; leftovers are fine
        cand = rng.normal(0.0, 1.0, (3 * n, d))
        cand = np.array([standardize(v) for v in cand])
        dist = np.linalg.norm(
            cand[:, None, :] - real_vecs[None, :, :], axis=2
        ).min(axis=1)
        kept.extend(cand[dist > radius])
        if len(kept) >= n:
            break
    return np.array(kept[:n]) if kept else np.empty((0, d))


def _train_gan_once(registry, config, rng, generator=None, discriminator=None):
    seqs, nexts, seq_ids = _sequence_dataset(registry, config.seq_len)
    real_vecs, real_ids = _real_dataset(registry)
    d = real_vecs.shape[1]
    n_out = 1 + len(registry)

    if generator is None or generator.input_size != config.seq_len * d:
        generator = Network(
            [config.seq_len * d, *GENERATOR_HIDDEN, d],
            ["relu", "relu", "linear"], rng,
        )
    if (discriminator is None or discriminator.input_size != d
            or discriminator.output_size != n_out):
        discriminator = Network(
            [d, *DISCRIMINATOR_HIDDEN, n_out],
            ["relu", "relu", "sigmoid"], rng,
        )
    gen_opt = AdadeltaOptimizer(generator, epsilon=config.gan_adadelta_epsilon)
    disc_opt = AdadeltaOptimizer(discriminator,
                                 epsilon=config.gan_adadelta_epsilon)

    # probe rejection radius: a multiple of the mean nearest-neighbour
    # distance among the real vectors, so probes stay clear of regions a
    # fresh draw from a seen distribution could plausibly land in
    pair_dist = np.linalg.norm(
        real_vecs[:, None, :] - real_vecs[None, :, :], axis=2
    )
    np.fill_diagonal(pair_dist, np.inf)
    nn_dist = float(pair_dist.min(axis=1).mean())
    probe_radius = config.probe_radius_scale * nn_dist
    jitter = config.real_jitter_scale * nn_dist

    n_seq = seqs.shape[0]
    mb = min(config.gan_minibatch, n_seq)
    for epoch in range(config.gan_max_epochs):
        order = rng.permutation(n_seq)
        for start in range(0, n_seq, mb):
            take = order[start:start + mb]
            seq_batch, next_batch, id_batch = seqs[take], nexts[take], seq_ids[take]

            fake = generator.forward(seq_batch)

            # discriminator steps: real vectors keep their ids; fakes and
            # unseen-region probes are class 0. Reals get double weight so
            # the class-0 material cannot crowd them out. Jittered copies
            # of the stored window stand in for fresh draws from the same
            # distribution, widening each class region past the exact
            # training points.
            for _ in range(config.disc_steps):
                real_take = rng.choice(
                    real_vecs.shape[0],
                    size=min(2 * len(take), real_vecs.shape[0]),
                    replace=False,
                )
                reals = real_vecs[real_take]
                if jitter > 0.0:
                    reals = np.array([
                        standardize(v)
                        for v in reals + rng.normal(0.0, jitter, reals.shape)
                    ])
                probes = _sample_probes(rng, len(take), real_vecs, probe_radius)
                disc_in = np.vstack([reals, fake, probes])
                disc_labels = np.concatenate([
                    real_ids[real_take],
                    np.zeros(len(fake) + len(probes), dtype=int),
                ])
                train_step(discriminator, disc_in, disc_labels,
                           "cross_entropy", disc_opt)

            # generator step: predict the true next vector while pushing the
            # discriminator to call the fake by the imitated distribution's
            # id. The adversarial pull is capped relative to the prediction
            # gradient so it cannot drag fakes into a foreign real region.
            pre, post = generator.forward_cached(seq_batch)
            out = post[-1]
            mse_grad = 2.0 * (out - next_batch) / len(out)
            ce_value, _, ce_grad = loss_gradients(
                discriminator, out, id_batch, "cross_entropy"
            )
            mse_norm = float(np.linalg.norm(mse_grad))
            ce_norm = float(np.linalg.norm(ce_grad))
            if ce_norm > config.ce_grad_clip * mse_norm and ce_norm > 0.0:
                ce_grad = ce_grad * (config.ce_grad_clip * mse_norm / ce_norm)
            mse_value = float(np.mean((out - next_batch) ** 2))
            gen_loss = mse_value + ce_value
            if not np.isfinite(gen_loss):
                raise TrainingDivergedError(f"non-finite generator loss: {gen_loss}")
            grads, _ = _backward(generator, pre, post, mse_grad + ce_grad, False)
            apply_gradients(generator, grads, gen_opt)

        # stop once the discriminator separates all reals from current fakes
        all_fake = generator.forward(seqs)
        epoch_loss = batch_loss(
            discriminator,
            np.vstack([real_vecs, all_fake]),
            np.concatenate([real_ids, np.zeros(len(all_fake), dtype=int)]),
            "cross_entropy",
        )
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(f"non-finite discriminator loss: {epoch_loss}")
        if epoch_loss < config.disc_loss_threshold:
            log.debug("GAN converged after %d epochs (loss %.4f)", epoch + 1,
                      epoch_loss)
            break
    return generator, discriminator


# ---------------------------------------------------------------------------
# Detector state machine


class DriftGanDetector:
    """Streaming drift detector around the GAN pair and the registry.

    Usage: ``initialize`` with the first ``rho`` feature vectors, then feed
    every subsequent vector to ``observe``; a ``DriftDecision`` is returned
    at each batch boundary (``none`` otherwise). Labeled exemplars are
    recorded through ``add_exemplar`` once the true label is known.
    """

    def __init__(self, config: DetectorConfig | None = None):
        self.config = config or DetectorConfig()
        self.config.validate()
        self.rng = np.random.default_rng(self.config.seed)
        self.registry = DistributionRegistry(self.config.per_dist_cap)
        self.generator: Network | None = None
        self.discriminator: Network | None = None
        self._batch: list[np.ndarray] = []
        self._pending_window: list[np.ndarray] | None = None
        self._pending_id: int | None = None
        self.instances_seen = 0
        self.events: list[DriftEvent] = []

    @property
    def current(self) -> int:
        return self.registry.current

    def get_params(self) -> dict:
        return dict(self.config.__dict__)

    def initialize(self, window_features) -> None:
        """Train the initial GAN on the first rho raw feature vectors."""
        window = [standardize(x) for x in window_features]
        if len(window) < self.config.rho:
            raise ValueError(f"need {self.config.rho} vectors to initialize")
        dist_id = self.registry.add(window)
        self.registry.current = dist_id
        self.generator, self.discriminator = train_gan(
            self.registry, self.config, self.rng
        )
        self.instances_seen = len(window)
        self._check_consistency()

    def add_exemplar(self, features, label) -> None:
        """Store a labeled instance under the current distribution."""
        self.registry.get(self.registry.current).add_exemplar(features, label)

    def observe(self, features) -> DriftDecision:
        """Consume one raw feature vector; decide at batch boundaries."""
        if self.discriminator is None:
            raise RuntimeError("detector not initialized")
        std = standardize(features)
        self.instances_seen += 1
        index = self.instances_seen - 1

        if self._pending_window is not None:
            self._pending_window.append(std)
            if len(self._pending_window) >= self.config.rho:
                self._finish_registration()
            return DriftDecision("none", None, index)

        self._batch.append(std)
        if len(self._batch) < self.config.batch_size:
            return DriftDecision("none", None, index)
        batch, self._batch = self._batch, []
        return self.detect(batch, index)

    def detect(self, batch_std, instance_index: int) -> DriftDecision:
        """Batch-consensus drift rule on standardized vectors."""
        ids = classify_batch(self.discriminator, batch_std)
        first = ids[0]
        if any(i != first for i in ids) or first == self.registry.current:
            return DriftDecision("none", None, instance_index)
        if first == 0:
            dist_id = len(self.registry) + 1
            self._begin_registration(batch_std)
            decision = DriftDecision("new", dist_id, instance_index)
        else:
            self.registry.current = first
            decision = DriftDecision("recurring", first, instance_index)
        self.events.append(DriftEvent(instance_index, decision.kind,
                                      decision.dist_id))
        log.info("drift at instance %d: %s distribution %d",
                 instance_index, decision.kind, decision.dist_id)
        return decision

    def historical_sample(self, dist_id: int) -> list:
        return historical_sample(self.registry, dist_id,
                                 self.config.historical_fraction, self.rng)

    # -- new-distribution registration ---------------------------------------

    def _begin_registration(self, batch_std) -> None:
        window = list(batch_std)
        if len(window) >= self.config.rho:
            self._register(window[-self.config.rho:])
        else:
            # buffer further instances until rho vectors are available
            self._pending_window = window

    def _finish_registration(self) -> None:
        window, self._pending_window = self._pending_window, None
        self._register(window[: self.config.rho])

    def _register(self, window_std) -> int:
        dist_id = self.register_distribution(window_std)
        return dist_id

    def register_distribution(self, window_std) -> int:
        """Add a record, grow the discriminator, retrain the GAN."""
        if len(window_std) < self.config.rho:
            raise ValueError(f"need at least rho={self.config.rho} vectors")
        dist_id = self.registry.add(list(window_std))
        extend_output_layer(self.discriminator, self.rng)
        self.generator, self.discriminator = train_gan(
            self.registry, self.config, self.rng,
            self.generator, self.discriminator,
        )
        self.registry.current = dist_id
        self._check_consistency()
        return dist_id

    def _check_consistency(self) -> None:
        assert self.discriminator.output_size == 1 + len(self.registry)
