"""Domain model for rallies, rounds and ball contacts.

All types are frozen dataclasses. Constructors do not enforce structural
rules; :func:`validate_rally` reports every violation so that malformed data
can be inspected instead of rejected on sight.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union

N_ZONES = 9
N_RATINGS = 4
MAX_BLOCKERS = 3
MAX_CONTACTS = 4


class Team(str, enum.Enum):
    A = "A"
    B = "B"

    @property
    def other(self) -> "Team":
        return Team.B if self is Team.A else Team.A


class Level(str, enum.Enum):
    COLLEGE = "college"
    PROFESSIONAL = "professional"


class HitType(str, enum.Enum):
    # Order is frozen: the value index is the class label, and BLOCKED must stay
    # last so the non-blocked label set is a prefix.
    POWER = "power"
    TIP = "tip"
    ROLL = "roll"
    TOOL = "tool"
    OFF_SPEED = "off_speed"
    DUMP = "dump"
    FREE_BALL = "free_ball"
    BLOCKED = "blocked"

    @property
    def index(self) -> int:
        return _HIT_INDEX[self]

    @classmethod
    def from_index(cls, i: int) -> "HitType":
        return _HIT_TYPES[i]


_HIT_TYPES = tuple(HitType)
_HIT_INDEX = {h: i for i, h in enumerate(_HIT_TYPES)}


class ServeType(str, enum.Enum):
    FLOAT = "float"
    JUMP = "jump"
    JUMP_FLOAT = "jump_float"

    @property
    def index(self) -> int:
        return _SERVE_INDEX[self]


_SERVE_INDEX = {s: i for i, s in enumerate(ServeType)}


class WinReason(str, enum.Enum):
    KILL = "kill"
    BLOCK = "block"
    ATTACK_ERROR = "attack_error"
    SERVICE_ACE = "service_ace"
    SERVICE_ERROR = "service_error"
    OTHER = "other"


@dataclass(frozen=True)
class Pass:
    zone: int
    rating: int
    serve_type: Optional[ServeType] = None

    kind = "pass"


@dataclass(frozen=True)
class Set:
    zone: int
    rating: int
    destination: int

    kind = "set"


@dataclass(frozen=True)
class Hit:
    zone: int
    hit_type: HitType

    kind = "hit"


@dataclass(frozen=True)
class Block:
    blockers: int
    touched: bool = False

    kind = "block"


Contact = Union[Pass, Set, Hit, Block]
CONTACT_ORDER = (Pass, Set, Hit, Block)
CONTACT_KINDS = tuple(c.kind for c in CONTACT_ORDER)


@dataclass(frozen=True)
class Round:
    team: Team
    number: int
    contacts: tuple[Contact, ...]

    def find(self, kind: type) -> Optional[Contact]:
        """Return the first contact of the given class, or None."""
        for c in self.contacts:
            if isinstance(c, kind):
                return c
        return None


@dataclass(frozen=True)
class Rally:
    match_id: str
    level: Level
    rally_id: str
    rounds: tuple[Round, ...]
    winner: Team
    win_reason: WinReason = WinReason.OTHER


@dataclass(frozen=True)
class Violation:
    path: str
    rule: str

    def __str__(self) -> str:
        return f"{self.path}: {self.rule}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    def __bool__(self) -> bool:
        # truthy when the rally is valid
        return not self.violations

    def __iter__(self):
        return iter(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    def add(self, path: str, rule: str) -> None:
        self.violations.append(Violation(path, rule))


def _check_zone(report: ValidationReport, path: str, zone) -> None:
    if not isinstance(zone, int) or isinstance(zone, bool) or not 1 <= zone <= N_ZONES:
        report.add(path, f"zone must be an integer in 1..{N_ZONES}, got {zone!r}")


def _check_rating(report: ValidationReport, path: str, rating) -> None:
    if not isinstance(rating, int) or isinstance(rating, bool) or not 0 <= rating < N_RATINGS:
        report.add(path, f"rating must be an integer in 0..{N_RATINGS - 1}, got {rating!r}")


def _check_contact(report: ValidationReport, path: str, c, first_round: bool) -> None:
    if isinstance(c, Pass):
        _check_zone(report, f"{path}.zone", c.zone)
        _check_rating(report, f"{path}.rating", c.rating)
        if c.serve_type is not None:
            if not isinstance(c.serve_type, ServeType):
                report.add(f"{path}.serve_type", f"unknown serve type {c.serve_type!r}")
            elif not first_round:
                report.add(f"{path}.serve_type", "serve type only allowed on the first round's pass")
    elif isinstance(c, Set):
        _check_zone(report, f"{path}.zone", c.zone)
        _check_rating(report, f"{path}.rating", c.rating)
        _check_zone(report, f"{path}.destination", c.destination)
    elif isinstance(c, Hit):
        _check_zone(report, f"{path}.zone", c.zone)
        if not isinstance(c.hit_type, HitType):
            report.add(f"{path}.hit_type", f"unknown hit type {c.hit_type!r}")
    elif isinstance(c, Block):
        b = c.blockers
        if not isinstance(b, int) or isinstance(b, bool) or not 0 <= b <= MAX_BLOCKERS:
            report.add(f"{path}.blockers", f"blockers must be an integer in 0..{MAX_BLOCKERS}, got {b!r}")
        if not isinstance(c.touched, bool):
            report.add(f"{path}.touched", "touched must be a boolean")
    else:
        report.add(path, f"unknown contact {type(c).__name__}")


def validate_rally(rally: Rally) -> ValidationReport:
    """Check every structural invariant of a rally.

    Returns a report whose violation paths look like ``rounds[1].contacts[0]``.
    An empty report means the rally is valid.
    """
    report = ValidationReport()
    if not isinstance(rally.winner, Team):
        report.add("winner", f"unknown team {rally.winner!r}")
    if not isinstance(rally.level, Level):
        report.add("level", f"unknown level {rally.level!r}")
    if not isinstance(rally.win_reason, WinReason):
        report.add("win_reason", f"unknown win reason {rally.win_reason!r}")
    if not rally.rounds:
        report.add("rounds", "a rally needs at least one round")
        return report

    for i, rnd in enumerate(rally.rounds):
        path = f"rounds[{i}]"
        if not isinstance(rnd.team, Team):
            report.add(f"{path}.team", f"unknown team {rnd.team!r}")
        elif i > 0 and rnd.team == rally.rounds[i - 1].team:
            report.add(f"{path}.team", "possession must alternate between rounds")
        if rnd.number != i + 1:
            report.add(f"{path}.number", f"round numbers must run 1,2,...; expected {i + 1}, got {rnd.number}")

        n = len(rnd.contacts)
        if not 1 <= n <= MAX_CONTACTS:
            report.add(f"{path}.contacts", f"a round has 1-{MAX_CONTACTS} contacts, got {n}")

        last = -1
        for j, c in enumerate(rnd.contacts):
            cpath = f"{path}.contacts[{j}]"
            _check_contact(report, cpath, c, first_round=(i == 0))
            kind = next((k for k, cls in enumerate(CONTACT_ORDER) if isinstance(c, cls)), None)
            if kind is not None:
                if kind <= last:
                    report.add(cpath, "contact order must be a subsequence of pass, set, hit, block")
                last = max(last, kind)
    return report
