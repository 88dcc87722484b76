"""Seeded synthetic rallies with known conditional structure.

Rallies are sampled ancestrally from the probability tables of a
:class:`SkillProfile`. Because every table is finite, the accuracy of the
Bayes-optimal predictor for each task can be computed exactly by
enumeration (:func:`bayes_accuracy`), which gives trained models a ceiling
to be measured against.

Generative process for one rally (``K`` = ``max_rounds``)::

    the serving team is A or B with equal probability
    for round k = 1, 2, ...  (possession alternates, receiver first)
        pass rating ~ P(rating | serve type) on round 1, P(rating | dig) after
        passer zone ~ P(passer zone)
        rating 0 -> the round is a lone pass
        otherwise
            setter zone ~ P(setter zone)
            destination ~ P(destination | pass rating, setter zone)
            set rating  ~ P(set rating | pass rating)
            hit type    ~ P(hit type | set rating, destination), hitter zone = destination
            blockers    ~ P(blockers | destination), touched ~ Bernoulli if blockers > 0
        the rally ends after round k with probability 1 - continuation (always at K);
        on ending, the round's team wins with P(win | hit type, blockers)
        (or the no-attack probability for a lone pass)
"""

from __future__ import annotations

import bisect
import json
import os
from dataclasses import dataclass
from typing import Union

import numpy as np

from .rally import (
    N_RATINGS,
    N_ZONES,
    Block,
    Hit,
    HitType,
    Level,
    Pass,
    Rally,
    Round,
    ServeType,
    Set,
    Team,
    WinReason,
)

N_SERVES = len(ServeType)
N_HITS = len(HitType)
N_BLOCKERS = 4
BLOCKED = HitType.BLOCKED.index

_TABLE_SHAPES = {
    "serve": (N_SERVES,),
    "pass_rating": (N_SERVES, N_RATINGS),
    "dig_rating": (N_RATINGS,),
    "passer_zone": (N_ZONES,),
    "setter_zone": (N_ZONES,),
    "set_destination": (N_RATINGS, N_ZONES, N_ZONES),
    "set_rating": (N_RATINGS, N_RATINGS),
    "hit_type": (N_RATINGS, N_ZONES, N_HITS),
    "blockers": (N_ZONES, N_BLOCKERS),
}
_SCALARS = ("win_without_attack", "touch_prob", "continuation")


@dataclass
class SkillProfile:
    """Conditional probability tables for one level of play.

    Zones and destinations are stored zero-based (index = zone - 1). The
    last axis of every table is the sampled variable and sums to 1.
    ``win`` is indexed ``[hit type, blockers]`` and holds the probability
    that the attacking round's team wins when the rally ends there.
    """

    level: Level
    serve: np.ndarray
    pass_rating: np.ndarray
    dig_rating: np.ndarray
    passer_zone: np.ndarray
    setter_zone: np.ndarray
    set_destination: np.ndarray
    set_rating: np.ndarray
    hit_type: np.ndarray
    blockers: np.ndarray
    win: np.ndarray
    win_without_attack: float = 0.03
    touch_prob: float = 0.35
    continuation: float = 0.55
    max_rounds: int = 10

    def __post_init__(self):
        self.level = Level(self.level)
        for name in (*_TABLE_SHAPES, "win"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        self.validate()

    def validate(self) -> None:
        for name, shape in _TABLE_SHAPES.items():
            t = getattr(self, name)
            if t.shape != shape:
                raise ValueError(f"profile table {name!r} has shape {t.shape}, expected {shape}")
            if np.any(t < 0):
                raise ValueError(f"profile table {name!r} has negative entries")
            bad = np.abs(t.sum(axis=-1) - 1.0) > 1e-9
            if np.any(bad):
                raise ValueError(f"profile table {name!r}: rows {np.argwhere(np.atleast_1d(bad)).tolist()} do not sum to 1")
        if self.win.shape != (N_HITS, N_BLOCKERS) or np.any((self.win < 0) | (self.win > 1)):
            raise ValueError("profile table 'win' must be 8x4 probabilities")
        for name in _SCALARS:
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"profile value {name!r} must lie in [0, 1]")
        if self.continuation >= 1.0 and self.max_rounds < 1:
            raise ValueError("rallies would never end")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")

    def to_dict(self) -> dict:
        d = {"level": self.level.value}
        for name in (*_TABLE_SHAPES, "win"):
            d[name] = getattr(self, name).tolist()
        for name in _SCALARS:
            d[name] = float(getattr(self, name))
        d["max_rounds"] = int(self.max_rounds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SkillProfile":
        return cls(**d)


def save_profile(profile: SkillProfile, path: Union[str, os.PathLike]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(profile.to_dict(), fh, indent=1)
        fh.write("\n")


def load_profile(name_or_path: Union[str, os.PathLike]) -> SkillProfile:
    """A shipped profile name (``college``, ``professional``) or a JSON file."""
    if str(name_or_path) in _BUILDERS:
        return _BUILDERS[str(name_or_path)]()
    with open(name_or_path, encoding="utf-8") as fh:
        return SkillProfile.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# shipped profiles

# preferred destination (1-based zone) and its base weight, by (pass rating, setter zone)
_SET_PREFS = {
    (3, 2): {3: 0.65, 4: 0.15, 2: 0.10, 6: 0.10},
    (3, 3): {2: 0.65, 3: 0.15, 4: 0.10, 6: 0.10},
    (2, 2): {4: 0.65, 3: 0.15, 2: 0.10, 6: 0.10},
    (2, 3): {6: 0.60, 4: 0.15, 2: 0.15, 3: 0.10},
    (1, 2): {4: 0.70, 2: 0.15, 6: 0.15},
    (1, 3): {1: 0.55, 4: 0.25, 6: 0.20},
}

# dominant hit type by destination group and set rating 0..3
_HIT_PREFS = {
    "left": (HitType.FREE_BALL, HitType.ROLL, HitType.TOOL, HitType.POWER),
    "middle": (HitType.FREE_BALL, HitType.DUMP, HitType.TIP, HitType.POWER),
    "right": (HitType.FREE_BALL, HitType.OFF_SPEED, HitType.POWER, HitType.TOOL),
    "back": (HitType.FREE_BALL, HitType.FREE_BALL, HitType.ROLL, HitType.POWER),
}
_ZONE_GROUP = {1: "back", 2: "right", 3: "middle", 4: "left", 5: "back", 6: "back", 7: "left", 8: "middle", 9: "right"}

_WIN_BASE = {
    HitType.POWER: 0.95,
    HitType.TIP: 0.80,
    HitType.ROLL: 0.20,
    HitType.TOOL: 0.92,
    HitType.OFF_SPEED: 0.18,
    HitType.DUMP: 0.85,
    HitType.FREE_BALL: 0.06,
}


def _default_profile(level: Level, set_noise: float, hit_peak: float, blocked_mass: float, set_quality) -> SkillProfile:
    uniform9 = np.full(N_ZONES, 1.0 / N_ZONES)

    dest = np.tile(uniform9, (N_RATINGS, N_ZONES, 1))
    for (rating, zone), prefs in _SET_PREFS.items():
        row = np.zeros(N_ZONES)
        for d, w in prefs.items():
            row[d - 1] = w
        dest[rating, zone - 1] = (1.0 - set_noise) * row / row.sum() + set_noise * uniform9

    hits = np.zeros((N_RATINGS, N_ZONES, N_HITS))
    for sr in range(N_RATINGS):
        for d in range(1, N_ZONES + 1):
            dom = _HIT_PREFS[_ZONE_GROUP[d]][sr].index
            row = np.full(N_HITS, (1.0 - hit_peak - blocked_mass) / (N_HITS - 2))
            row[dom] = hit_peak
            row[BLOCKED] = blocked_mass
            hits[sr, d - 1] = row

    blockers = np.empty((N_ZONES, N_BLOCKERS))
    for d in range(1, N_ZONES + 1):
        if d in (2, 3, 4):
            blockers[d - 1] = (0.05, 0.35, 0.45, 0.15)
        elif d in (1, 5, 6):
            blockers[d - 1] = (0.20, 0.45, 0.30, 0.05)
        else:
            blockers[d - 1] = (0.10, 0.40, 0.40, 0.10)

    win = np.empty((N_HITS, N_BLOCKERS))
    for h in HitType:
        for nb in range(N_BLOCKERS):
            if h is HitType.BLOCKED:
                win[h.index, nb] = 0.02
            else:
                win[h.index, nb] = np.clip(_WIN_BASE[h] + 0.02 * (1 - nb), 0.01, 0.99)

    setter = np.zeros(N_ZONES)
    setter[1], setter[2] = 0.55, 0.45
    return SkillProfile(
        level=level,
        serve=[0.40, 0.25, 0.35],
        pass_rating=[
            [0.05, 0.25, 0.40, 0.30],
            [0.15, 0.30, 0.30, 0.25],
            [0.10, 0.30, 0.35, 0.25],
        ],
        dig_rating=[0.10, 0.35, 0.35, 0.20],
        passer_zone=[0.20, 0.0, 0.0, 0.0, 0.40, 0.40, 0.0, 0.0, 0.0],
        setter_zone=setter,
        set_destination=dest,
        set_rating=[[0.25, 0.25, 0.25, 0.25], *set_quality],
        hit_type=hits,
        blockers=blockers,
        win=win,
    )


def college_profile() -> SkillProfile:
    return _default_profile(
        Level.COLLEGE,
        set_noise=0.10,
        hit_peak=0.68,
        blocked_mass=0.14,
        set_quality=[[0.15, 0.40, 0.35, 0.10], [0.05, 0.20, 0.50, 0.25], [0.02, 0.08, 0.40, 0.50]],
    )


def professional_profile() -> SkillProfile:
    # more randomized setting, more consistent attacking
    return _default_profile(
        Level.PROFESSIONAL,
        set_noise=0.35,
        hit_peak=0.74,
        blocked_mass=0.12,
        set_quality=[[0.08, 0.32, 0.45, 0.15], [0.03, 0.15, 0.52, 0.30], [0.01, 0.05, 0.34, 0.60]],
    )


_BUILDERS = {"college": college_profile, "professional": professional_profile}


# ---------------------------------------------------------------------------
# sampling


class _Draw:
    """Categorical draws from a numpy generator via buffered uniforms."""

    def __init__(self, rng: np.random.Generator, buffer: int = 4096):
        self.rng = rng
        self.size = buffer
        self.buf: list[float] = []

    def uniform(self) -> float:
        if not self.buf:
            self.buf = self.rng.random(self.size).tolist()
        return self.buf.pop()

    def choice(self, cdf: list[float]) -> int:
        return min(bisect.bisect_right(cdf, self.uniform()), len(cdf) - 1)


def _cdf(t: np.ndarray):
    """Nested lists of cumulative sums along the last axis."""
    return np.cumsum(t, axis=-1).tolist()


class _Tables:
    def __init__(self, p: SkillProfile):
        self.serve = _cdf(p.serve)
        self.pass_rating = _cdf(p.pass_rating)
        self.dig_rating = _cdf(p.dig_rating)
        self.passer_zone = _cdf(p.passer_zone)
        self.setter_zone = _cdf(p.setter_zone)
        self.set_destination = _cdf(p.set_destination)
        self.set_rating = _cdf(p.set_rating)
        self.hit_type = _cdf(p.hit_type)
        self.blockers = _cdf(p.blockers)


def _sample_round(p: SkillProfile, t: _Tables, draw: _Draw, team: Team, number: int):
    """Returns the round and the win probability if the rally ended on it."""
    serve = None
    if number == 1:
        serve = ServeType(list(ServeType)[draw.choice(t.serve)])
        rating = draw.choice(t.pass_rating[serve.index])
    else:
        rating = draw.choice(t.dig_rating)
    pzone = draw.choice(t.passer_zone) + 1
    contacts = [Pass(pzone, rating, serve)]
    if rating == 0:
        return Round(team, number, tuple(contacts)), p.win_without_attack, None

    szone = draw.choice(t.setter_zone)
    dest = draw.choice(t.set_destination[rating][szone])
    srating = draw.choice(t.set_rating[rating])
    hit = HitType.from_index(draw.choice(t.hit_type[srating][dest]))
    nb = draw.choice(t.blockers[dest])
    touched = nb > 0 and draw.uniform() < p.touch_prob
    contacts += [Set(szone + 1, srating, dest + 1), Hit(dest + 1, hit), Block(nb, touched)]
    return Round(team, number, tuple(contacts)), float(p.win[hit.index, nb]), hit


def generate(profile: SkillProfile, n_rallies: int, seed: int = 0, match_size: int = 50) -> list[Rally]:
    """Sample ``n_rallies`` rallies; identical for identical arguments."""
    if n_rallies < 1:
        raise ValueError("n_rallies must be >= 1")
    profile.validate()
    tables = _Tables(profile)
    draw = _Draw(np.random.default_rng(seed))
    level = profile.level.value
    out = []
    for i in range(n_rallies):
        server = Team.A if draw.uniform() < 0.5 else Team.B
        team = server.other
        rounds = []
        for k in range(1, profile.max_rounds + 1):
            rnd, p_win, hit = _sample_round(profile, tables, draw, team, k)
            rounds.append(rnd)
            if k == profile.max_rounds or draw.uniform() >= profile.continuation:
                break
            team = team.other
        won = draw.uniform() < p_win
        winner = team if won else team.other
        if won:
            reason = WinReason.KILL if hit is not None else WinReason.OTHER
        elif hit is HitType.BLOCKED:
            reason = WinReason.BLOCK
        elif hit is not None:
            reason = WinReason.ATTACK_ERROR
        else:
            reason = WinReason.SERVICE_ACE if k == 1 else WinReason.OTHER
        out.append(
            Rally(
                match_id=f"{level}-s{seed}-m{i // match_size}",
                level=profile.level,
                rally_id=f"{level}-s{seed}-r{i}",
                rounds=tuple(rounds),
                winner=winner,
                win_reason=reason,
            )
        )
    return out


# ---------------------------------------------------------------------------
# exact Bayes-optimal accuracy


def _reach(p: SkillProfile) -> np.ndarray:
    """P(rally reaches round k) for k = 1..max_rounds."""
    return p.continuation ** np.arange(p.max_rounds)


def _rating_by_round(p: SkillProfile) -> np.ndarray:
    """Pass-rating distribution at each round position, shape (K, 4)."""
    first = p.serve @ p.pass_rating
    rows = np.tile(p.dig_rating, (p.max_rounds, 1))
    rows[0] = first
    return rows


def _attack_joint(p: SkillProfile, rating: np.ndarray) -> np.ndarray:
    """Joint P(set rating, destination) for a pass-rating weighting (rating 0 dropped)."""
    w = rating.copy()
    w[0] = 0.0
    # P(dest | rating) after summing out the setter zone
    dest = np.einsum("z,rzd->rd", p.setter_zone, p.set_destination)
    return np.einsum("r,rs,rd->sd", w, p.set_rating, dest)


def bayes_accuracy(profile: SkillProfile, task: str, include_blocked: bool = True) -> float:
    """Expected accuracy of the Bayes-optimal predictor, by enumeration.

    For ``set`` and ``hit`` the label depends on the graph's features only
    through (pass rating, setter zone) and (set rating, destination)
    respectively. For ``outcome`` the posterior depends on the round
    position and the (hit type, blockers) pair, and the predictor
    thresholds it at 0.5.
    """
    p = profile
    reach = _reach(p)
    ratings = _rating_by_round(p)
    mix = reach @ ratings  # expected count of rounds per pass rating

    if task == "set":
        w = mix.copy()
        w[0] = 0.0
        joint = w[:, None] * p.setter_zone[None, :]
        best = p.set_destination.max(axis=-1)
        return float((joint * best).sum() / joint.sum())

    if task == "hit":
        joint = _attack_joint(p, mix)
        if include_blocked:
            best = p.hit_type.max(axis=-1)
            return float((joint * best).sum() / joint.sum())
        best = p.hit_type[..., :BLOCKED].max(axis=-1)
        kept = 1.0 - p.hit_type[..., BLOCKED]
        return float((joint * best).sum() / (joint * kept).sum())

    if task == "outcome":
        K = p.max_rounds
        ends = np.full(K, 1.0 - p.continuation)
        ends[-1] = 1.0
        # per round position: probabilities of each attack state and its win probability
        states = []
        for k in range(K):
            sd = _attack_joint(p, ratings[k])  # (set rating, dest), unnormalized mass of attacks
            hb = np.einsum("sd,sdh,db->hb", sd, p.hit_type, p.blockers)
            probs = np.concatenate([[ratings[k][0]], hb.reshape(-1)])
            wins = np.concatenate([[p.win_without_attack], p.win.reshape(-1)])
            states.append((probs, wins))
        # chance that round k's team wins the rally, given round k is reached
        team_wins = np.zeros(K + 1)
        for k in range(K - 1, -1, -1):
            probs, wins = states[k]
            later = 1.0 - team_wins[k + 1] if k + 1 < K else 0.0
            team_wins[k] = ends[k] * (probs @ wins) + (1.0 - ends[k]) * later
        acc = 0.0
        for k in range(K):
            probs, wins = states[k]
            later = 1.0 - team_wins[k + 1] if k + 1 < K else 0.0
            post = ends[k] * wins + (1.0 - ends[k]) * later
            acc += reach[k] * (probs @ np.maximum(post, 1.0 - post))
        return float(acc / reach.sum())

    raise ValueError(f"unknown task {task!r}")
