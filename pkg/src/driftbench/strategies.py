"""Streaming strategies: the GAN detector plus the three baselines.

Every strategy wraps a Hoeffding tree, is initialized on the first
``rho`` labeled instances, and then answers ``step(x, y)`` with the
prediction made before the label is seen.
"""

from __future__ import annotations

from collections import deque

from .detector import DetectorConfig, DriftGanDetector
from .tree import HoeffdingTreeClassifier

STRATEGY_KINDS = ("driftgan", "initial_learn", "regular_update", "regular_retrain")


class Strategy:
    kind = "base"

    def __init__(self, n_features: int, n_classes: int, rho: int = 100):
        self.n_features = n_features
        self.n_classes = n_classes
        self.rho = rho
        self.classifier = HoeffdingTreeClassifier(n_features, n_classes)
        self._initialized = False

    def get_params(self) -> dict:
        return {"kind": self.kind, "n_features": self.n_features,
                "n_classes": self.n_classes, "rho": self.rho}

    @property
    def drift_events(self) -> list:
        return []

    def initialize(self, instances) -> None:
        """Train on the first rho labeled instances (not scored)."""
        if len(instances) < self.rho:
            raise ValueError(f"need {self.rho} instances to initialize")
        for inst in instances:
            self.classifier.partial_fit(inst.features, inst.label)
        self._initialized = True

    def step(self, x, y: int) -> int:
        if not self._initialized:
            raise RuntimeError("strategy not initialized")
        prediction = self.classifier.predict(x)
        self._learn(x, int(y))
        return prediction

    def _learn(self, x, y: int) -> None:
        raise NotImplementedError


class InitialLearnStrategy(Strategy):
    """Train once on the initial window, never update."""

    kind = "initial_learn"

    def _learn(self, x, y: int) -> None:
        pass


class RegularUpdateStrategy(Strategy):
    """Incrementally update the tree on every labeled instance."""

    kind = "regular_update"

    def _learn(self, x, y: int) -> None:
        self.classifier.partial_fit(x, y)


class RegularRetrainStrategy(Strategy):
    """Update incrementally and rebuild from the trailing window on a schedule."""

    kind = "regular_retrain"

    def __init__(self, n_features, n_classes, rho=100, retrain_interval=None):
        super().__init__(n_features, n_classes, rho)
        self.retrain_interval = retrain_interval or rho
        self._window: deque = deque(maxlen=rho)
        self._since_retrain = 0

    def get_params(self) -> dict:
        params = super().get_params()
        params["retrain_interval"] = self.retrain_interval
        return params

    def initialize(self, instances) -> None:
        super().initialize(instances)
        for inst in instances:
            self._window.append((inst.features, inst.label))

    def _learn(self, x, y: int) -> None:
        self.classifier.partial_fit(x, y)
        self._window.append((x, y))
        self._since_retrain += 1
        if self._since_retrain >= self.retrain_interval:
            self._since_retrain = 0
            self.classifier.reset()
            self.classifier.fit_many(self._window)


class DriftGanStrategy(Strategy):
    """Reset and retrain the tree whenever the GAN detector signals a drift.

    On a recurring drift the retraining set is the triggering batch plus a
    sample of the matched distribution's stored exemplars; on a new drift
    only the triggering batch is available.
    """

    kind = "driftgan"

    def __init__(self, n_features, n_classes, rho=100,
                 config: DetectorConfig | None = None):
        config = config or DetectorConfig(rho=rho)
        super().__init__(n_features, n_classes, config.rho)
        self.detector = DriftGanDetector(config)
        self._recent: deque = deque(maxlen=config.batch_size)

    def get_params(self) -> dict:
        params = super().get_params()
        params.update(self.detector.get_params())
        return params

    @property
    def drift_events(self) -> list:
        return self.detector.events

    def initialize(self, instances) -> None:
        super().initialize(instances)
        self.detector.initialize([inst.features for inst in instances])
        for inst in instances:
            self.detector.add_exemplar(inst.features, inst.label)

    def _learn(self, x, y: int) -> None:
        self.classifier.partial_fit(x, y)
        self._recent.append((x, y))
        # the label is revealed, so the instance is attributed to the
        # current distribution before the batch decision can change it
        self.detector.add_exemplar(x, y)
        decision = self.detector.observe(x)
        if decision.is_drift:
            self._retrain(decision)

    def _retrain(self, decision) -> None:
        training = []
        if decision.kind == "recurring":
            training.extend(self.detector.historical_sample(decision.dist_id))
        training.extend(self._recent)
        self.classifier.reset()
        self.classifier.fit_many(training)


def make_strategy(kind: str, n_features: int, n_classes: int, *, rho: int = 100,
                  retrain_interval: int | None = None,
                  config: DetectorConfig | None = None) -> Strategy:
    if kind == "driftgan":
        if config is None:
            config = DetectorConfig(rho=rho)
        return DriftGanStrategy(n_features, n_classes, rho, config)
    if kind == "initial_learn":
        return InitialLearnStrategy(n_features, n_classes, rho)
    if kind == "regular_update":
        return RegularUpdateStrategy(n_features, n_classes, rho)
    if kind == "regular_retrain":
        return RegularRetrainStrategy(n_features, n_classes, rho, retrain_interval)
    raise ValueError(f"unknown strategy {kind!r}; choose from {STRATEGY_KINDS}")
