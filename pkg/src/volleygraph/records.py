"""Reader and writer for ``.vrr`` rally-record files.

A file is a JSON header object on the first line followed by one JSON rally
object per line. Field names are documented in ``docs/format.md``.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Union

from .rally import (
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
    validate_rally,
)

FORMAT_VERSION = "1"
DEFAULT_SOURCE = "volleygraph"

_RALLY_KEYS = ("match_id", "level", "rally_id", "winner", "win_reason", "rounds")
_ROUND_KEYS = ("team", "round", "contacts")
_CONTACT_KEYS = {
    "pass": ("kind", "zone", "rating", "serve_type"),
    "set": ("kind", "zone", "rating", "destination"),
    "hit": ("kind", "zone", "hit_type"),
    "block": ("kind", "blockers", "touched"),
}
_OPTIONAL = {"serve_type", "win_reason"}


class FormatError(ValueError):
    """The file header is missing or names an unsupported format version."""


class RecordError(ValueError):
    """A single record could not be decoded; the reader skips it."""


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


@dataclass
class ParseResult:
    rallies: list[Rally] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    header: dict = field(default_factory=dict)
    lines: list[int] = field(default_factory=list)  # source line of each rally


def _int(obj: dict, key: str) -> int:
    v = obj.get(key)
    if not isinstance(v, int) or isinstance(v, bool):
        raise RecordError(f"{key!r} must be an integer, got {v!r}")
    return v


def _enum(enum_cls, obj: dict, key: str):
    v = obj.get(key)
    try:
        return enum_cls(v)
    except ValueError:
        raise RecordError(f"{key!r}: unknown value {v!r}") from None


def _str(obj: dict, key: str) -> str:
    v = obj.get(key)
    if not isinstance(v, str):
        raise RecordError(f"{key!r} must be a string, got {v!r}")
    return v


def _require(obj, keys, where: str, warnings: list[str]) -> None:
    if not isinstance(obj, dict):
        raise RecordError(f"{where} must be an object")
    for k in keys:
        if k not in obj and k not in _OPTIONAL:
            raise RecordError(f"{where}: missing key {k!r}")
    for k in obj:
        if k not in keys:
            warnings.append(f"{where}: unknown key {k!r} dropped")


def _decode_contact(obj, where: str, warnings: list[str]):
    if not isinstance(obj, dict):
        raise RecordError(f"{where} must be an object")
    kind = obj.get("kind")
    if kind not in _CONTACT_KEYS:
        raise RecordError(f"{where}: unknown contact kind {kind!r}")
    _require(obj, _CONTACT_KEYS[kind], where, warnings)
    if kind == "pass":
        serve = obj.get("serve_type")
        serve = None if serve is None else _enum(ServeType, obj, "serve_type")
        return Pass(_int(obj, "zone"), _int(obj, "rating"), serve)
    if kind == "set":
        return Set(_int(obj, "zone"), _int(obj, "rating"), _int(obj, "destination"))
    if kind == "hit":
        return Hit(_int(obj, "zone"), _enum(HitType, obj, "hit_type"))
    touched = obj.get("touched")
    if not isinstance(touched, bool):
        raise RecordError(f"{where}: 'touched' must be a boolean")
    return Block(_int(obj, "blockers"), touched)


def rally_from_dict(obj, warnings: list[str] | None = None) -> Rally:
    """Decode one record object. Unknown keys are appended to ``warnings``."""
    warnings = [] if warnings is None else warnings
    _require(obj, _RALLY_KEYS, "rally", warnings)
    rounds_obj = obj["rounds"]
    if not isinstance(rounds_obj, list):
        raise RecordError("'rounds' must be a list")
    rounds = []
    for i, r in enumerate(rounds_obj):
        where = f"rounds[{i}]"
        _require(r, _ROUND_KEYS, where, warnings)
        contacts_obj = r["contacts"]
        if not isinstance(contacts_obj, list):
            raise RecordError(f"{where}: 'contacts' must be a list")
        contacts = tuple(
            _decode_contact(c, f"{where}.contacts[{j}]", warnings) for j, c in enumerate(contacts_obj)
        )
        rounds.append(Round(_enum(Team, r, "team"), _int(r, "round"), contacts))
    reason = WinReason.OTHER if obj.get("win_reason") is None else _enum(WinReason, obj, "win_reason")
    return Rally(
        match_id=_str(obj, "match_id"),
        level=_enum(Level, obj, "level"),
        rally_id=_str(obj, "rally_id"),
        rounds=tuple(rounds),
        winner=_enum(Team, obj, "winner"),
        win_reason=reason,
    )


def _contact_to_dict(c) -> dict:
    if isinstance(c, Pass):
        d = {"kind": "pass", "zone": c.zone, "rating": c.rating}
        if c.serve_type is not None:
            d["serve_type"] = c.serve_type.value
        return d
    if isinstance(c, Set):
        return {"kind": "set", "zone": c.zone, "rating": c.rating, "destination": c.destination}
    if isinstance(c, Hit):
        return {"kind": "hit", "zone": c.zone, "hit_type": c.hit_type.value}
    return {"kind": "block", "blockers": c.blockers, "touched": c.touched}


def rally_to_dict(rally: Rally) -> dict:
    return {
        "match_id": rally.match_id,
        "level": rally.level.value,
        "rally_id": rally.rally_id,
        "winner": rally.winner.value,
        "win_reason": rally.win_reason.value,
        "rounds": [
            {
                "team": r.team.value,
                "round": r.number,
                "contacts": [_contact_to_dict(c) for c in r.contacts],
            }
            for r in rally.rounds
        ],
    }


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def parse_header(line: str) -> dict:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FormatError(f"line 1: header is not valid JSON ({exc.msg})") from None
    if not isinstance(header, dict) or "format_version" not in header:
        raise FormatError("line 1: header must be an object with 'format_version'")
    if header["format_version"] != FORMAT_VERSION:
        raise FormatError(f"line 1: unsupported format_version {header['format_version']!r}")
    return header


def parse(stream: Union[IO[str], Iterable[str], str]) -> ParseResult:
    """Read a ``.vrr`` stream.

    Bad records are skipped with a :class:`Diagnostic`; the only fatal
    condition is a missing or unsupported header (:class:`FormatError`).
    A plain ``str`` argument is treated as the file contents.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    result = ParseResult()
    lines = iter(stream)
    first = next(lines, None)
    if first is None:
        raise FormatError("empty input: missing header line")
    result.header = parse_header(first)

    for lineno, line in enumerate(lines, start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            result.diagnostics.append(Diagnostic(lineno, f"malformed record: {exc.msg}"))
            continue
        warnings: list[str] = []
        try:
            rally = rally_from_dict(obj, warnings)
        except RecordError as exc:
            result.diagnostics.append(Diagnostic(lineno, str(exc)))
            continue
        result.diagnostics.extend(Diagnostic(lineno, w) for w in warnings)
        result.rallies.append(rally)
        result.lines.append(lineno)
    return result


def read(path: Union[str, os.PathLike]) -> ParseResult:
    with open(path, encoding="utf-8") as fh:
        return parse(fh)


def serialize(rallies: Iterable[Rally], source: str = DEFAULT_SOURCE) -> str:
    """Render rallies as ``.vrr`` text. Raises ``ValueError`` on an invalid rally."""
    out = [_dumps({"format_version": FORMAT_VERSION, "source": source})]
    for k, rally in enumerate(rallies):
        report = validate_rally(rally)
        if not report:
            raise ValueError(f"rally {k} ({rally.rally_id}) is invalid: {report.violations[0]}")
        out.append(_dumps(rally_to_dict(rally)))
    return "\n".join(out) + "\n"


def write(path: Union[str, os.PathLike], rallies: Iterable[Rally], source: str = DEFAULT_SOURCE) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize(rallies, source))
