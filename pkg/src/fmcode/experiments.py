"""Experiment protocols over a synthetic corpus.

Everything here consumes a generated corpus, enrolls every account the
same way the live service does, and replays test/spoof/session signals
to produce metric reports.  Scores are distances: lower = more genuine.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .alignment import Template, build_template, dtw_align, update_template
from .cnn import TrainConfig, augment_registration, predict_topk, train_cnn
from .errors import InsufficientScoresError
from .features import local_distance
from .identify import IdEntry, identify_exhaustive
from .metrics import MetricsReport, compute_metrics, eer_threshold, threshold_at_far
from .signals import Signal, derive_kinematics, preprocess
from .svm import EnsembleConfig, SvmEnsemble, score_distance_series, train_ensemble
from .synthgen import Corpus


def _prep(traj) -> Signal:
    return preprocess(derive_kinematics(traj))


@dataclass
class PreparedAccount:
    account_id: str
    reg: list[Signal]
    test: list[Signal]
    spoof: list[Signal]
    sessions: list[list[Signal]] = field(default_factory=list)
    template: Template | None = None
    ensemble: SvmEnsemble | None = None
    threshold: float | None = None


def prepare_corpus(corpus: Corpus) -> list[PreparedAccount]:
    out = []
    for acct in corpus.accounts:
        out.append(
            PreparedAccount(
                acct.account_id,
                [_prep(t) for t in acct.reg],
                [_prep(t) for t in acct.test],
                [_prep(t) for t in acct.spoof],
                [[_prep(t) for t in sess] for sess in acct.sessions],
            )
        )
    return out


def enroll_accounts(
    prepared: list[PreparedAccount],
    cfg: EnsembleConfig = EnsembleConfig(),
    seed: int = 0,
    train_svms: bool = True,
) -> None:
    """Build templates (and optionally ensembles) in place; negatives for
    each account are the other accounts' registration signals."""
    all_reg = {p.account_id: p.reg for p in prepared}
    for i, p in enumerate(prepared):
        p.template = build_template(p.reg)
        if train_svms:
            negatives = [s for aid, sigs in all_reg.items() if aid != p.account_id for s in sigs]
            p.ensemble = train_ensemble(p.reg, p.template, negatives, cfg, seed=seed + i)


def _score_pair(p: PreparedAccount, s: Signal, method: str, seed: int) -> float:
    aligned = dtw_align(s, _template_signal(p.template))
    if method == "plain_dtw":
        return aligned.dtw_distance
    ds = local_distance(aligned.samples, p.template)
    return score_distance_series(p.ensemble, ds, seed=seed)


def _template_signal(tmpl: Template) -> Signal:
    return Signal(tmpl.t_hat, tmpl.rate, tuple(f"a{i}" for i in range(tmpl.dims)))


def run_auth_experiment(
    corpus: Corpus,
    method: str = "svm_ensemble",
    cfg: EnsembleConfig = EnsembleConfig(),
    seed: int = 0,
    prepared: list[PreparedAccount] | None = None,
) -> MetricsReport:
    """Enroll everything, then score own test signals (genuine), other
    accounts' test signals (guessing), and the spoof split."""
    if method not in ("svm_ensemble", "plain_dtw"):
        raise ValueError(f"unknown method {method!r}")
    if prepared is None:
        prepared = prepare_corpus(corpus)
    if any(p.template is None for p in prepared):
        enroll_accounts(prepared, cfg, seed, train_svms=(method == "svm_ensemble"))
    if len(prepared) < 2:
        raise InsufficientScoresError("guessing class needs at least 2 accounts")
    genuine, guessing, spoof = [], [], []
    for p in prepared:
        for s in p.test:
            genuine.append(_score_pair(p, s, method, seed))
        for q in prepared:
            if q.account_id == p.account_id:
                continue
            for s in q.test:
                guessing.append(_score_pair(p, s, method, seed))
        for s in p.spoof:
            spoof.append(_score_pair(p, s, method, seed))
    counts = {
        "n": len(prepared),
        "k": len(prepared[0].test),
        "m": len(prepared[0].spoof),
    }
    return compute_metrics(genuine, guessing, spoof or None, counts)


def run_auth_comparison(
    corpus: Corpus,
    cfg: EnsembleConfig = EnsembleConfig(),
    seed: int = 0,
    prepared: list[PreparedAccount] | None = None,
) -> dict[str, MetricsReport]:
    """Both scoring methods over the same request set, sharing the DTW
    alignment of each (account, signal) pair."""
    if prepared is None:
        prepared = prepare_corpus(corpus)
    if any(p.template is None or p.ensemble is None for p in prepared):
        enroll_accounts(prepared, cfg, seed)
    pools: dict[str, dict[str, list[float]]] = {
        m: {"genuine": [], "guessing": [], "spoof": []}
        for m in ("svm_ensemble", "plain_dtw")
    }

    def add(p: PreparedAccount, s: Signal, kind: str):
        aligned = dtw_align(s, _template_signal(p.template))
        pools["plain_dtw"][kind].append(aligned.dtw_distance)
        ds = local_distance(aligned.samples, p.template)
        pools["svm_ensemble"][kind].append(
            score_distance_series(p.ensemble, ds, seed=seed)
        )

    for p in prepared:
        for s in p.test:
            add(p, s, "genuine")
        for q in prepared:
            if q.account_id == p.account_id:
                continue
            for s in q.test:
                add(p, s, "guessing")
        for s in p.spoof:
            add(p, s, "spoof")
    counts = {
        "n": len(prepared),
        "k": len(prepared[0].test),
        "m": len(prepared[0].spoof),
    }
    return {
        m: compute_metrics(v["genuine"], v["guessing"], v["spoof"] or None, counts)
        for m, v in pools.items()
    }


def calibrate_id_thresholds(prepared: list[PreparedAccount], seed: int = 0) -> None:
    """Per-account verification threshold at the EER of own registration
    scores vs cross-account registration scores."""
    for p in prepared:
        own = [_score_pair(p, s, "svm_ensemble", seed) for s in p.reg]
        others = []
        for q in prepared:
            if q.account_id != p.account_id:
                others.extend(_score_pair(p, s, "svm_ensemble", seed) for s in q.reg)
        p.threshold = eer_threshold(np.array(own), np.array(others))


@dataclass
class IdentReport:
    """Per-k identification accuracy and spoof-success rates."""

    k_values: list[int]
    accuracy_with_verify: dict[int, float]
    accuracy_without_verify: dict[int, float]
    spoof_success_with_verify: dict[int, float]
    spoof_success_without_verify: dict[int, float]

    def to_dict(self) -> dict:
        return {
            "k_values": self.k_values,
            "accuracy_with_verify": self.accuracy_with_verify,
            "accuracy_without_verify": self.accuracy_without_verify,
            "spoof_success_with_verify": self.spoof_success_with_verify,
            "spoof_success_without_verify": self.spoof_success_without_verify,
        }


def train_identifier_cnn(
    prepared: list[PreparedAccount],
    train_cfg: TrainConfig = TrainConfig(),
    augment_target: int = 125,
    seed: int = 0,
):
    labeled = []
    for p in prepared:
        for s in augment_registration(p.reg, target=augment_target, seed=seed):
            labeled.append((s, p.account_id))
    return train_cnn(labeled, train_cfg)


def run_ident_experiment(
    corpus: Corpus,
    k_range=range(1, 8),
    cfg: EnsembleConfig = EnsembleConfig(),
    train_cfg: TrainConfig = TrainConfig(),
    seed: int = 0,
    prepared: list[PreparedAccount] | None = None,
    model=None,
) -> IdentReport:
    """CNN top-k + per-candidate verification, swept over k."""
    if prepared is None:
        prepared = prepare_corpus(corpus)
    if any(p.template is None for p in prepared):
        enroll_accounts(prepared, cfg, seed)
    if any(p.threshold is None for p in prepared):
        calibrate_id_thresholds(prepared, seed)
    if model is None:
        model = train_identifier_cnn(prepared, train_cfg, seed=seed)
    k_values = list(k_range)
    k_max = max(k_values)
    by_account = {p.account_id: p for p in prepared}

    def _query(s: Signal, target: str):
        """top-k_max candidates + their verification scores, evaluated
        once; per-k answers are slices of this."""
        cands = predict_topk(model, s, k_max)
        verif = []
        for number, _prob in cands:
            q = by_account[number]
            verif.append((number, _score_pair(q, s, "svm_ensemble", seed), q.threshold))
        results = {}
        for k in k_values:
            head = verif[:k]
            hit_topk = any(num == target for num, _, _ in head)
            below = [(num, val) for num, val, th in head if val < th]
            chosen = min(below, key=lambda t: t[1])[0] if below else None
            results[k] = (hit_topk, chosen == target)
        return results

    acc_no_v = {k: 0 for k in k_values}
    acc_v = {k: 0 for k in k_values}
    sp_no_v = {k: 0 for k in k_values}
    sp_v = {k: 0 for k in k_values}
    n_test = n_spoof = 0
    for p in prepared:
        for s in p.test:
            res = _query(s, p.account_id)
            n_test += 1
            for k, (topk, verified) in res.items():
                acc_no_v[k] += topk
                acc_v[k] += verified
        for s in p.spoof:
            res = _query(s, p.account_id)
            n_spoof += 1
            for k, (topk, verified) in res.items():
                sp_no_v[k] += topk
                sp_v[k] += verified
    return IdentReport(
        k_values,
        {k: acc_v[k] / n_test for k in k_values},
        {k: acc_no_v[k] / n_test for k in k_values},
        {k: sp_v[k] / max(n_spoof, 1) for k in k_values},
        {k: sp_no_v[k] / max(n_spoof, 1) for k in k_values},
    )


def run_exhaustive_ident(
    corpus: Corpus,
    seed: int = 0,
    prepared: list[PreparedAccount] | None = None,
    latency_sizes: list[int] | None = None,
) -> dict:
    """Linear-search identification baseline: accuracy plus per-query
    latency as a function of store size."""
    if prepared is None:
        prepared = prepare_corpus(corpus)
    if any(p.template is None for p in prepared):
        enroll_accounts(prepared, EnsembleConfig(), seed)
    if any(p.threshold is None for p in prepared):
        calibrate_id_thresholds(prepared, seed)
    entries = {
        p.account_id: IdEntry(p.template, p.ensemble, p.threshold) for p in prepared
    }
    correct = total = 0
    for p in prepared:
        for s in p.test:
            answer, _ = identify_exhaustive(entries, s, seed=seed)
            correct += answer == p.account_id
            total += 1
    latencies = {}
    if latency_sizes is None:
        n = len(prepared)
        latency_sizes = sorted({max(2, n // 4), max(2, n // 2), n})
    probe = prepared[0].test[0]
    for size in latency_sizes:
        subset = dict(list(entries.items())[:size])
        t0 = time.perf_counter()
        reps = 3
        for _ in range(reps):
            identify_exhaustive(subset, probe, seed=seed)
        latencies[size] = (time.perf_counter() - t0) / reps
    return {
        "accuracy": correct / total,
        "latency_seconds": latencies,
    }


def run_permanence(
    corpus: Corpus,
    policy: str = "static",
    cfg: EnsembleConfig = EnsembleConfig(),
    lam: float = 0.1,
    seed: int = 0,
    prepared: list[PreparedAccount] | None = None,
) -> dict:
    """Sequential session replay under a template-maintenance policy.

    The decision threshold is set once, at FAR = 1e-4 of the initial
    genuine/guessing score pools, and held fixed so the series isolates
    the effect of the policy.
    """
    if policy not in ("static", "update", "update_and_retrain"):
        raise ValueError(f"unknown policy {policy!r}")
    if prepared is None:
        prepared = prepare_corpus(corpus)
    if any(p.template is None for p in prepared):
        enroll_accounts(prepared, cfg, seed)
    if not prepared or not prepared[0].sessions:
        raise InsufficientScoresError("corpus has no session splits")
    genuine = [
        _score_pair(p, s, "svm_ensemble", seed) for p in prepared for s in p.test
    ]
    guessing = [
        _score_pair(p, s, "svm_ensemble", seed)
        for p in prepared
        for q in prepared
        if q.account_id != p.account_id
        for s in q.test
    ]
    threshold = threshold_at_far(np.array(genuine), np.array(guessing), 1e-4)
    # mutable per-account state the policy evolves
    state = {
        p.account_id: {
            "template": p.template,
            "ensemble": p.ensemble,
            "positives": list(p.reg),
        }
        for p in prepared
    }
    all_reg = {p.account_id: p.reg for p in prepared}
    n_sessions = len(prepared[0].sessions)
    acceptance = []
    for s_idx in range(n_sessions):
        accepted = total = 0
        for p in prepared:
            st = state[p.account_id]
            tmpl, ens = st["template"], st["ensemble"]
            aligned_samples = []
            for s in p.sessions[s_idx]:
                al = dtw_align(s, _template_signal(tmpl))
                ds = local_distance(al.samples, tmpl)
                value = score_distance_series(ens, ds, seed=seed)
                accepted += value < threshold
                total += 1
                aligned_samples.append(al.samples)
            if policy in ("update", "update_and_retrain"):
                for samples in aligned_samples:
                    st["template"] = update_template(st["template"], samples, lam)
            if policy == "update_and_retrain":
                st["positives"] = st["positives"] + list(p.sessions[s_idx])
                negatives = [
                    s for aid, sigs in all_reg.items()
                    if aid != p.account_id for s in sigs
                ]
                st["ensemble"] = train_ensemble(
                    st["positives"], st["template"], negatives, cfg,
                    seed=seed,
                    window_sets=[m.window_set for m in ens.models],
                )
        acceptance.append(accepted / total)
    return {
        "policy": policy,
        "threshold": threshold,
        "acceptance_by_session": acceptance,
        "final_acceptance": acceptance[-1],
    }
