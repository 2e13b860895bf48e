"""Runtime configuration; every tunable has a documented default and can
be overridden from a JSON config file."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .cnn import TrainConfig
from .svm import EnsembleConfig


@dataclass(frozen=True)
class ServiceConfig:
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    cnn: TrainConfig = field(default_factory=TrainConfig)
    registration_count: int = 5        # signals per field at sign-up
    template_update_lambda: float = 0.1
    update_on_accept: bool = False     # permanence policy, operator-enabled
    identify_k: int = 3
    score_seed: int = 7                # fixed so decisions are reproducible
    threshold_override: float | None = None
    cold_start_negatives: int = 60     # synthetic guessing signals for the first accounts
    cold_start_seed: int = 1234
    lockout_enabled: bool = False      # config hook only; no throttling by default
    auto_train_index: bool = False     # retrain CNN in the background after registration

    @classmethod
    def load(cls, path) -> "ServiceConfig":
        with open(path) as f:
            raw = json.load(f)
        ens = EnsembleConfig(**raw.pop("ensemble", {}))
        cnn = TrainConfig(**raw.pop("cnn", {}))
        return cls(ensemble=ens, cnn=cnn, **raw)

    def dump(self, path) -> None:
        with open(path, "w") as f:
            json.dump(asdict(self), f, indent=1)
