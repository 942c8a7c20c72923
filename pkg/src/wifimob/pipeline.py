"""Two-stage inference: GP speed imputation followed by activity classification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from . import classify, regress
from .features import DEFAULT_CLASSIFIER_FEATURES, FeatureRecord

CLASSIFIERS = ("tree", "nb", "forest")


@dataclass(frozen=True)
class PipelineConfig:
    classifiers: tuple[str, ...] = CLASSIFIERS
    feature_names: tuple[str, ...] = DEFAULT_CLASSIFIER_FEATURES
    tree: classify.TreeConfig = field(default_factory=classify.TreeConfig)
    forest: classify.ForestConfig = field(default_factory=classify.ForestConfig)
    search: regress.SearchConfig = field(default_factory=regress.SearchConfig)
    impute: bool = True
    n_jobs: int = 1

    def __post_init__(self):
        bad = set(self.classifiers) - set(CLASSIFIERS)
        if bad:
            raise ValueError(f"unknown classifiers {sorted(bad)}")


@dataclass
class TwoStageModel:
    gpr: regress.GprModel | None
    classifiers: dict[str, classify.Model]
    feature_names: tuple[str, ...]

    def prepare(self, records: Sequence[FeatureRecord]) -> list[FeatureRecord]:
        return regress.impute_speeds(records, self.gpr) if self.gpr is not None else list(records)


def train_classifier(name: str, data: classify.Dataset, config: PipelineConfig) -> classify.Model:
    if name == "tree":
        return classify.train_tree(data, config.tree)
    if name == "nb":
        return classify.train_naive_bayes(data)
    if name == "forest":
        return classify.train_forest(data, config.forest, n_jobs=config.n_jobs)
    raise ValueError(f"unknown classifier {name!r}")


def train(records: Sequence[FeatureRecord], config: PipelineConfig = PipelineConfig()) -> TwoStageModel:
    """Fit the GP on complete rows, impute missing speeds, then fit classifiers.

    Raises ValueError when fewer than two complete rows exist for the GP or
    no labeled rows remain for the classifiers.
    """
    gpr = regress.fit_records(records, config.search) if config.impute else None
    model = TwoStageModel(gpr, {}, tuple(config.feature_names))
    data = classify.Dataset.from_records(model.prepare(records), config.feature_names)
    if len(data) == 0:
        raise ValueError("no labeled feature records to train on")
    for name in config.classifiers:
        model.classifiers[name] = train_classifier(name, data, config)
    return model
