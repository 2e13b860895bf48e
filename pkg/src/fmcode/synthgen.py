"""Synthetic in-air-handwriting corpus.

Stands in for a human dataset: each passcode is a sequence of strokes
through via points in a writing plane, rendered as minimum-jerk motion.
A user's style (speed, slant, fixed via-point offsets, tremor) is what
makes renderings of the same passcode by different writers
distinguishable; spoofers share the passcode content but draw a fresh
style, and guessing attempts are simply other accounts' signals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .signals import (
    RawTrajectory,
    Signal,
    derive_kinematics,
    preprocess,
    read_trajectory,
    write_trajectory,
)

SAMPLE_RATE = 60.0


@dataclass(frozen=True)
class PasscodeSpec:
    """Stroke via points in a canonical writing plane + nominal timing."""

    strokes: tuple[np.ndarray, ...]          # each (m, 2)
    stroke_durations: tuple[float, ...]      # seconds per stroke

    def __post_init__(self):
        if len(self.strokes) < 2:
            raise ValueError("a passcode needs at least 2 strokes")
        object.__setattr__(
            self, "strokes", tuple(np.asarray(s, dtype=float) for s in self.strokes)
        )

    @property
    def n_via(self) -> int:
        return sum(len(s) for s in self.strokes)

    @classmethod
    def random(cls, rng: np.random.Generator, n_strokes: int | None = None) -> "PasscodeSpec":
        """Random-walk strokes across the writing plane, 8-24 strokes."""
        if n_strokes is None:
            n_strokes = int(rng.integers(8, 25))
        pen = np.zeros(2)
        strokes, durations = [], []
        for _ in range(n_strokes):
            m = int(rng.integers(2, 5))
            pts = [pen.copy()]
            for _ in range(m - 1):
                pen = pen + rng.normal(0.0, 0.5, size=2) + np.array([0.6, 0.0])
                pts.append(pen.copy())
            strokes.append(np.array(pts))
            durations.append(float(rng.uniform(0.18, 0.35)))
            pen = pen + rng.normal(0.0, 0.3, size=2)  # pen travel to next stroke
        return cls(tuple(strokes), tuple(durations))


@dataclass(frozen=True)
class UserStyle:
    """Persistent per-writer rendering parameters for one passcode."""

    speed_scale: float
    slant: float                   # radians
    via_jitter: np.ndarray         # (n_via, 2) fixed offsets
    tremor_sigma: float
    rep_jitter: float = 0.16       # per-repetition via-point noise

    def __post_init__(self):
        if self.speed_scale <= 0 or self.tremor_sigma < 0:
            raise ValueError("speed_scale > 0 and tremor_sigma >= 0 required")
        object.__setattr__(self, "via_jitter", np.asarray(self.via_jitter, dtype=float))

    @classmethod
    def random(
        cls,
        spec: PasscodeSpec,
        rng: np.random.Generator,
        jitter_scale: float = 0.06,
        tremor_sigma: float = 0.015,
        rep_jitter: float = 0.16,
    ) -> "UserStyle":
        return cls(
            speed_scale=float(rng.uniform(0.85, 1.18)),
            slant=float(rng.normal(0.0, 0.12)),
            via_jitter=rng.normal(0.0, jitter_scale, size=(spec.n_via, 2)),
            tremor_sigma=tremor_sigma,
            rep_jitter=rep_jitter,
        )

    def drifted(self, rng: np.random.Generator, step: float) -> "UserStyle":
        """One session's worth of slow style drift (random walk)."""
        return UserStyle(
            speed_scale=self.speed_scale * float(np.exp(rng.normal(0.0, step * 0.3))),
            slant=self.slant + float(rng.normal(0.0, step * 0.5)),
            via_jitter=self.via_jitter + rng.normal(0.0, step, size=self.via_jitter.shape),
            tremor_sigma=self.tremor_sigma,
            rep_jitter=self.rep_jitter,
        )


def _min_jerk(p0: np.ndarray, p1: np.ndarray, n_samples: int) -> np.ndarray:
    """Rest-to-rest minimum-jerk interpolation, n_samples points incl. ends."""
    tau = np.linspace(0.0, 1.0, n_samples)
    shape = 10 * tau**3 - 15 * tau**4 + 6 * tau**5
    return p0 + (p1 - p0) * shape[:, None]


def _smooth_noise(n: int, rng: np.random.Generator, n_knots: int = 8) -> np.ndarray:
    """Band-limited unit-scale noise via linear interp between knots."""
    knots = rng.normal(0.0, 1.0, size=max(n_knots, 2))
    return np.interp(np.linspace(0, 1, n), np.linspace(0, 1, len(knots)), knots)


def gen_signal(spec: PasscodeSpec, style: UserStyle, seed: int = 0) -> RawTrajectory:
    """Render one repetition of the passcode in the writer's style.

    Minimum-jerk segments through style-jittered via points, time-scaled
    by speed, plus i.i.d. tremor and a smooth +-5% local time warp per
    repetition.  Sampled at 60 Hz.
    """
    rng = np.random.default_rng(seed)
    rot = np.array([
        [math.cos(style.slant), -math.sin(style.slant)],
        [math.sin(style.slant), math.cos(style.slant)],
    ])
    offset = 0
    pieces: list[np.ndarray] = []
    prev_end: np.ndarray | None = None
    for stroke, duration in zip(spec.strokes, spec.stroke_durations):
        jitter = style.via_jitter[offset : offset + len(stroke)]
        if style.rep_jitter > 0:
            jitter = jitter + rng.normal(0.0, style.rep_jitter, size=jitter.shape)
        via = (stroke + jitter) @ rot.T
        offset += len(stroke)
        seg_t = duration * style.speed_scale / max(len(via) - 1, 1)
        if prev_end is not None:
            hop = max(int(round(0.12 * style.speed_scale * SAMPLE_RATE)), 2)
            pieces.append(_min_jerk(prev_end, via[0], hop + 1)[1:])
        for a, b in zip(via[:-1], via[1:]):
            n = max(int(round(seg_t * SAMPLE_RATE)), 2)
            piece = _min_jerk(a, b, n + 1)
            pieces.append(piece if not pieces else piece[1:])
            prev_end = b
    pos = np.vstack(pieces)
    n = len(pos)
    # smooth local time warp: nonuniform timestamps, resampled to 60 Hz
    dt = (1.0 / SAMPLE_RATE) * (1.0 + 0.05 * np.tanh(_smooth_noise(n, rng)))
    t_warp = np.concatenate([[0.0], np.cumsum(dt[:-1])])
    t_uniform = np.arange(0.0, t_warp[-1], 1.0 / SAMPLE_RATE)
    warped = np.empty((len(t_uniform), 2))
    for j in range(2):
        warped[:, j] = np.interp(t_uniform, t_warp, pos[:, j])
    if style.tremor_sigma > 0:
        warped = warped + rng.normal(0.0, style.tremor_sigma, size=warped.shape)
    return RawTrajectory(t_uniform, warped, "pointer2d")


def render_preprocessed(spec: PasscodeSpec, style: UserStyle, seed: int) -> Signal:
    return preprocess(derive_kinematics(gen_signal(spec, style, seed)))


# ---------------------------------------------------------------------------
# corpus
# ---------------------------------------------------------------------------

@dataclass
class AccountData:
    account_id: str
    reg: list[RawTrajectory]
    test: list[RawTrajectory]
    spoof: list[RawTrajectory]                  # spoofers x reps, flattened
    sessions: list[list[RawTrajectory]] = field(default_factory=list)


@dataclass
class Corpus:
    accounts: list[AccountData]
    seed: int
    params: dict

    def save(self, root) -> None:
        root = Path(root)
        manifest = {"seed": self.seed, "params": self.params, "accounts": []}
        for acct in self.accounts:
            entry = {"id": acct.account_id, "splits": {}}
            base = root / "account" / acct.account_id
            splits = {"reg": acct.reg, "test": acct.test, "spoof": acct.spoof}
            for s_idx, session in enumerate(acct.sessions):
                splits[f"session-{s_idx}"] = session
            for name, trajs in splits.items():
                d = base / name
                d.mkdir(parents=True, exist_ok=True)
                files = []
                for i, traj in enumerate(trajs):
                    fname = f"{i:03d}.txt"
                    write_trajectory(d / fname, traj)
                    files.append(str((d / fname).relative_to(root)))
                entry["splits"][name] = files
            manifest["accounts"].append(entry)
        with open(root / "manifest.json", "w") as f:
            json.dump(manifest, f, indent=1)

    @classmethod
    def load(cls, root) -> "Corpus":
        root = Path(root)
        with open(root / "manifest.json") as f:
            manifest = json.load(f)
        accounts = []
        for entry in manifest["accounts"]:
            splits = {
                name: [read_trajectory(root / p, "pointer2d") for p in files]
                for name, files in entry["splits"].items()
            }
            session_names = sorted(
                (n for n in splits if n.startswith("session-")),
                key=lambda n: int(n.split("-")[1]),
            )
            accounts.append(
                AccountData(
                    entry["id"],
                    splits.get("reg", []),
                    splits.get("test", []),
                    splits.get("spoof", []),
                    [splits[n] for n in session_names],
                )
            )
        return cls(accounts, manifest["seed"], manifest["params"])


def gen_corpus(
    n_users: int,
    specs_per_user: int = 2,
    reg: int = 5,
    test: int = 5,
    spoofers: int = 7,
    spoof_reps: int = 5,
    sessions: int = 0,
    session_drift: float = 0.02,
    spoof_jitter: float = 0.30,
    seed: int = 0,
) -> Corpus:
    """Accounts = users x specs; each account carries registration, test,
    spoof, and optional drifting-session renderings."""
    if n_users < 2:
        raise ValueError("need at least 2 users")
    master = np.random.default_rng(seed)
    accounts = []
    for u in range(n_users):
        user_rng = np.random.default_rng(master.integers(2**63))
        for p in range(specs_per_user):
            spec = PasscodeSpec.random(user_rng)
            style = UserStyle.random(spec, user_rng)
            acct_seed = int(user_rng.integers(2**31))
            reg_t = [gen_signal(spec, style, acct_seed + i) for i in range(reg)]
            test_t = [gen_signal(spec, style, acct_seed + reg + i) for i in range(test)]
            spoof_t = []
            for a in range(spoofers):
                attacker = UserStyle.random(spec, user_rng, jitter_scale=spoof_jitter,
                                            tremor_sigma=0.02)
                for r in range(spoof_reps):
                    spoof_t.append(
                        gen_signal(spec, attacker, acct_seed + 1000 + a * spoof_reps + r)
                    )
            session_sets = []
            drift_style = style
            for s_i in range(sessions):
                drift_style = drift_style.drifted(user_rng, session_drift)
                session_sets.append([
                    gen_signal(spec, drift_style, acct_seed + 5000 + s_i * 100 + i)
                    for i in range(test)
                ])
            accounts.append(
                AccountData(f"u{u:03d}p{p}", reg_t, test_t, spoof_t, session_sets)
            )
    params = {
        "n_users": n_users, "specs_per_user": specs_per_user, "reg": reg,
        "test": test, "spoofers": spoofers, "spoof_reps": spoof_reps,
        "sessions": sessions, "session_drift": session_drift,
    }
    return Corpus(accounts, seed, params)
