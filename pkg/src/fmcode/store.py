"""Persistent account store: one directory per account plus a manifest.

Serialization is JSON with repr-precision floats, so every numeric field
round-trips bit-exactly and a decision made after a restart is identical
to one made before it.
"""

from __future__ import annotations

import datetime
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .alignment import Template
from .errors import NotFoundError
from .features import WindowSet
from .signals import Signal
from .svm import EnsembleConfig, SvmEnsemble, SvmModel


def _matrix(value) -> np.ndarray:
    return np.asarray(value, dtype=float)


def template_to_dict(t: Template) -> dict:
    return {
        "rate": t.rate,
        "k_signals": t.k_signals,
        "t_hat": t.t_hat.tolist(),
        "sigma_hat": t.sigma_hat.tolist(),
    }


def template_from_dict(d: dict) -> Template:
    return Template(_matrix(d["t_hat"]), _matrix(d["sigma_hat"]), d["k_signals"], d["rate"])


def ensemble_to_dict(e: SvmEnsemble) -> dict:
    return {
        "config": {
            "H": e.config.H, "T": e.config.T, "M": e.config.M, "C": e.config.C,
            "R_train": e.config.R_train, "R_score": e.config.R_score,
            "max_negative_signals": e.config.max_negative_signals,
        },
        "threshold": e.threshold,
        "models": [
            {
                "w": m.w.tolist(),
                "b": m.b,
                "windows": list(m.window_set.indices),
                "H": m.window_set.H,
                "T": m.window_set.T,
            }
            for m in e.models
        ],
    }


def ensemble_from_dict(d: dict) -> SvmEnsemble:
    cfg = EnsembleConfig(**d["config"])
    models = tuple(
        SvmModel(
            _matrix(m["w"]),
            m["b"],
            WindowSet(m["H"], m["T"], tuple(m["windows"])),
        )
        for m in d["models"]
    )
    return SvmEnsemble(models, cfg, d["threshold"])


def signal_to_dict(s: Signal) -> dict:
    return {"rate": s.rate, "axes": list(s.axis_labels), "samples": s.samples.tolist()}


def signal_from_dict(d: dict) -> Signal:
    return Signal(_matrix(d["samples"]), d["rate"], tuple(d["axes"]))


@dataclass
class AccountRecord:
    account_number: str
    id_template: Template
    passcode_template: Template
    id_ensemble: SvmEnsemble
    passcode_ensemble: SvmEnsemble
    reg_id_signals: list[Signal] = field(default_factory=list)
    reg_passcode_signals: list[Signal] = field(default_factory=list)
    created: str = ""
    updated: str = ""

    def to_dict(self) -> dict:
        return {
            "account_number": self.account_number,
            "id_template": template_to_dict(self.id_template),
            "passcode_template": template_to_dict(self.passcode_template),
            "id_ensemble": ensemble_to_dict(self.id_ensemble),
            "passcode_ensemble": ensemble_to_dict(self.passcode_ensemble),
            "reg_id_signals": [signal_to_dict(s) for s in self.reg_id_signals],
            "reg_passcode_signals": [signal_to_dict(s) for s in self.reg_passcode_signals],
            "created": self.created,
            "updated": self.updated,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AccountRecord":
        return cls(
            d["account_number"],
            template_from_dict(d["id_template"]),
            template_from_dict(d["passcode_template"]),
            ensemble_from_dict(d["id_ensemble"]),
            ensemble_from_dict(d["passcode_ensemble"]),
            [signal_from_dict(s) for s in d["reg_id_signals"]],
            [signal_from_dict(s) for s in d["reg_passcode_signals"]],
            d.get("created", ""),
            d.get("updated", ""),
        )


class AccountStore:
    """Directory-backed account records with atomic number allocation."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._manifest_path = self.root / "manifest.json"
        if not self._manifest_path.exists():
            self._write_manifest({"next_account": 1, "accounts": [], "index_trained_on": []})

    def _read_manifest(self) -> dict:
        with open(self._manifest_path) as f:
            return json.load(f)

    def _write_manifest(self, manifest: dict) -> None:
        tmp = self._manifest_path.with_suffix(".tmp")
        with open(tmp, "w") as f:
            json.dump(manifest, f, indent=1)
        tmp.replace(self._manifest_path)

    def allocate_account_number(self) -> str:
        with self._lock:
            manifest = self._read_manifest()
            number = f"acct-{manifest['next_account']:06d}"
            manifest["next_account"] += 1
            manifest["accounts"].append(number)
            self._write_manifest(manifest)
            return number

    def account_numbers(self) -> list[str]:
        return list(self._read_manifest()["accounts"])

    def save(self, record: AccountRecord) -> None:
        d = self.root / "account" / record.account_number
        d.mkdir(parents=True, exist_ok=True)
        record.updated = datetime.datetime.now(datetime.timezone.utc).isoformat()
        if not record.created:
            record.created = record.updated
        tmp = d / "record.json.tmp"
        with open(tmp, "w") as f:
            json.dump(record.to_dict(), f)
        tmp.replace(d / "record.json")

    def load(self, account_number: str) -> AccountRecord:
        path = self.root / "account" / account_number / "record.json"
        if not path.exists():
            raise NotFoundError(f"unknown account {account_number!r}")
        with open(path) as f:
            return AccountRecord.from_dict(json.load(f))

    def load_all(self) -> dict[str, AccountRecord]:
        return {n: self.load(n) for n in self.account_numbers()}

    # -- identification index -----------------------------------------------

    def index_paths(self):
        return self.root / "index_meta.json", self.root / "index_weights.npz"

    def save_index(self, model) -> None:
        meta_path, weights_path = self.index_paths()
        state = model.state_dict()
        np.savez(weights_path, **state["arrays"])
        meta = {k: v for k, v in state.items() if k != "arrays"}
        meta["trained_on"] = self.account_numbers()
        with open(meta_path, "w") as f:
            json.dump(meta, f)
        with self._lock:
            manifest = self._read_manifest()
            manifest["index_trained_on"] = meta["trained_on"]
            self._write_manifest(manifest)

    def load_index(self):
        from .cnn.model import build_identifier

        meta_path, weights_path = self.index_paths()
        if not meta_path.exists():
            return None, []
        with open(meta_path) as f:
            meta = json.load(f)
        model = build_identifier(
            meta["input_dims"], meta["class_labels"], dropout_rate=meta["dropout_rate"]
        )
        with np.load(weights_path) as arrays:
            model.load_arrays(dict(arrays))
        return model, meta["trained_on"]

    def index_is_stale(self) -> bool:
        manifest = self._read_manifest()
        return sorted(manifest["accounts"]) != sorted(manifest["index_trained_on"])
