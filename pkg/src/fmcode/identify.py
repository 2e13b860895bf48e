"""Account identification: CNN candidate lookup + template verification.

The CNN narrows the store down to k candidates; each candidate is then
verified exactly like an authentication attempt against that account's
ID template and ensemble.  Skipping the verification step makes spoofed
IDs trivially effective, so it is always on in the login path.
"""

from __future__ import annotations

from dataclasses import dataclass

from .alignment import Template
from .cnn import CnnModel, predict_topk
from .errors import NotFoundError
from .signals import Signal
from .svm import SvmEnsemble, score

UNIDENTIFIED = "unidentified"


@dataclass(frozen=True)
class IdEntry:
    """What identification needs to know about one account."""

    template: Template
    ensemble: SvmEnsemble
    threshold: float


def identify(
    model: CnnModel,
    accounts: dict[str, IdEntry],
    s: Signal,
    k: int = 3,
    seed: int = 0,
) -> tuple[str, list[tuple[str, float]]]:
    """Returns (account_number or "unidentified", per-candidate scores)."""
    if not accounts:
        raise NotFoundError("empty account store")
    candidates = predict_topk(model, s, k)
    scored = []
    for number, _prob in candidates:
        entry = accounts.get(number)
        if entry is None:
            continue  # account added after the last index train
        value = score(entry.ensemble, entry.template, s, seed=seed)
        scored.append((number, value, entry.threshold))
    accepted = [(num, val) for num, val, th in scored if val < th]
    if not accepted:
        return UNIDENTIFIED, [(num, val) for num, val, _ in scored]
    best = min(accepted, key=lambda item: item[1])
    return best[0], [(num, val) for num, val, _ in scored]


def identify_exhaustive(
    accounts: dict[str, IdEntry],
    s: Signal,
    seed: int = 0,
    verify: bool = True,
) -> tuple[str, list[tuple[str, float]]]:
    """Score the query against every account; correct but linear-time."""
    if not accounts:
        raise NotFoundError("empty account store")
    scored = [
        (number, score(entry.ensemble, entry.template, s, seed=seed), entry.threshold)
        for number, entry in sorted(accounts.items())
    ]
    pool = [(n, v) for n, v, th in scored if (not verify) or v < th]
    if not pool:
        return UNIDENTIFIED, [(n, v) for n, v, _ in scored]
    best = min(pool, key=lambda item: item[1])
    return best[0], [(n, v) for n, v, _ in scored]
