"""Two-line element sets: parsing, validation, serialization, constellations.

Only near-earth records are accepted; anything with an orbital period of
225 minutes or more is rejected with :class:`DeepSpaceUnsupported`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .errors import (
    ChecksumMismatch,
    CrossLineIdMismatch,
    DeepSpaceUnsupported,
    LineLength,
    MalformedEntry,
    MalformedField,
    TleError,
)

LINE_LENGTH = 69
DEEP_SPACE_PERIOD_MIN = 225.0


def checksum(line: str) -> int:
    """Modulo-10 checksum over the first 68 columns (digits count face value, '-' counts 1)."""
    total = 0
    for ch in line[:68]:
        if ch.isdigit():
            total += int(ch)
        elif ch == "-":
            total += 1
    return total % 10


def _epoch_year(two_digit: int) -> int:
    return 1900 + two_digit if two_digit >= 57 else 2000 + two_digit


def julian_day(year, month, day, hour=0, minute=0, second=0.0):
    """Julian date for a proleptic Gregorian calendar instant (valid 1900-2100)."""
    jd = (367 * year - (7 * (year + (month + 9) // 12)) // 4
          + (275 * month) // 9 + day + 1721013.5)
    return jd + ((second / 60.0 + minute) / 60.0 + hour) / 24.0


@dataclass(frozen=True)
class TleRecord:
    name: str
    norad_id: int
    classification: str
    intl_designator: str
    epoch_year: int
    epoch_day: float
    mean_motion_dot: float
    mean_motion_ddot: float
    bstar: float
    ephemeris_type: int
    element_set_no: int
    inclination: float
    raan: float
    eccentricity: float
    arg_perigee: float
    mean_anomaly: float
    mean_motion: float
    rev_at_epoch: int

    @property
    def epoch(self) -> datetime:
        start = datetime(self.epoch_year, 1, 1, tzinfo=timezone.utc)
        return start + timedelta(days=self.epoch_day - 1.0)

    @property
    def epoch_jd(self) -> tuple[float, float]:
        """Epoch as a (whole, fraction) Julian date pair."""
        return julian_day(self.epoch_year, 1, 1), self.epoch_day - 1.0

    @property
    def period_minutes(self) -> float:
        return 1440.0 / self.mean_motion

    def seconds_since_epoch(self, t: datetime) -> float:
        """Signed seconds from the element epoch to ``t`` without rounding the epoch."""
        if t.tzinfo is None:
            raise ValueError("timestamps must be timezone-aware (UTC)")
        jan1 = datetime(self.epoch_year, 1, 1, tzinfo=timezone.utc)
        return (t - jan1).total_seconds() - (self.epoch_day - 1.0) * 86400.0

    def to_lines(self) -> tuple[str, str]:
        return format_tle(self)


@dataclass(frozen=True)
class ConstellationSpec:
    name: str
    satellite_ids: tuple[int, ...]
    swath_buffer_km: float = 250.0
    gsd_m: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "satellite_ids", tuple(int(i) for i in self.satellite_ids))
        if not self.satellite_ids:
            raise ValueError(f"constellation {self.name!r} has no satellites")
        if self.swath_buffer_km <= 0:
            raise ValueError("swath_buffer_km must be positive")
        if self.gsd_m <= 0:
            raise ValueError("gsd_m must be positive")


# -- parsing -----------------------------------------------------------------

def _clean(line: str, which: int) -> str:
    line = line.rstrip("\r\n")
    if len(line) > LINE_LENGTH and not line[LINE_LENGTH:].strip():
        line = line[:LINE_LENGTH]
    if len(line) != LINE_LENGTH:
        raise LineLength(f"line {which} has {len(line)} characters, expected {LINE_LENGTH}")
    return line


def _num(text: str, what: str, kind=float):
    s = text.strip()
    try:
        return kind(s)
    except ValueError:
        raise MalformedField(f"{what}: {text!r} is not numeric") from None


def _implied_exponent(text: str, what: str) -> float:
    """Decode fields such as ' 28098-4' (= 0.28098e-4)."""
    s = text.strip()
    if not s:
        return 0.0
    sign = ""
    if s[0] in "+-":
        sign, s = ("-" if s[0] == "-" else ""), s[1:]
    mant, exp = s[:-2], s[-2:]
    if not mant.isdigit() or exp[0] not in "+-" or not exp[1].isdigit():
        raise MalformedField(f"{what}: {text!r} is not an implied-decimal exponent field")
    return float(f"{sign}0.{mant}e{exp}")


def _int_digits(text: str, what: str) -> int:
    s = text.strip()
    if not s.isdigit():
        raise MalformedField(f"{what}: {text!r} is not an integer")
    return int(s)


def parse_tle(text: str | list[str] | tuple[str, ...]) -> TleRecord:
    """Parse a two- or three-line entry into a :class:`TleRecord`."""
    lines = text.splitlines() if isinstance(text, str) else list(text)
    lines = [ln for ln in lines if ln.strip()]
    name = ""
    if len(lines) == 3:
        name = lines[0].strip()
        if name.startswith("0 "):
            name = name[2:].strip()
        lines = lines[1:]
    if len(lines) != 2:
        raise MalformedEntry(f"expected 2 or 3 lines, got {len(lines)}")
    l1 = _clean(lines[0], 1)
    l2 = _clean(lines[1], 2)
    if not l1.startswith("1 ") or not l2.startswith("2 "):
        raise MalformedEntry("entry must consist of a '1 ' line followed by a '2 ' line")

    for idx, line in ((1, l1), (2, l2)):
        if not line[68].isdigit():
            raise MalformedField(f"line {idx} checksum column is not a digit")
        if checksum(line) != int(line[68]):
            raise ChecksumMismatch(
                f"line {idx} checksum {line[68]} != computed {checksum(line)}"
            )

    norad1 = _int_digits(l1[2:7], "line 1 catalog number")
    norad2 = _int_digits(l2[2:7], "line 2 catalog number")
    if norad1 != norad2:
        raise CrossLineIdMismatch(f"catalog number {norad1} on line 1 but {norad2} on line 2")
    if norad1 <= 0:
        raise MalformedField("catalog number must be positive")

    yy = _int_digits(l1[18:20], "epoch year")
    epoch_day = _num(l1[20:32], "epoch day")
    if not 1.0 <= epoch_day < 367.0:
        raise MalformedField(f"epoch day {epoch_day} out of range")
    ecc_field = l2[26:33]
    if not ecc_field.strip().isdigit():
        raise MalformedField(f"eccentricity: {ecc_field!r} is not numeric")
    eph = l1[62].strip() or "0"
    rec = TleRecord(
        name=name,
        norad_id=norad1,
        classification=l1[7],
        intl_designator=l1[9:17].rstrip(),
        epoch_year=_epoch_year(yy),
        epoch_day=epoch_day,
        mean_motion_dot=_num(l1[33:43], "mean motion derivative"),
        mean_motion_ddot=_implied_exponent(l1[44:52], "mean motion second derivative"),
        bstar=_implied_exponent(l1[53:61], "bstar"),
        ephemeris_type=_num(eph, "ephemeris type", int),
        element_set_no=_num(l1[64:68], "element set number", int) if l1[64:68].strip() else 0,
        inclination=_num(l2[8:16], "inclination"),
        raan=_num(l2[17:25], "right ascension of ascending node"),
        eccentricity=float("0." + ecc_field.strip().rjust(7, "0")),
        arg_perigee=_num(l2[34:42], "argument of perigee"),
        mean_anomaly=_num(l2[43:51], "mean anomaly"),
        mean_motion=_num(l2[52:63], "mean motion"),
        rev_at_epoch=_num(l2[63:68], "revolution number", int) if l2[63:68].strip() else 0,
    )
    _validate(rec)
    return rec


def _validate(rec: TleRecord) -> None:
    if not 0.0 <= rec.inclination <= 180.0:
        raise MalformedField(f"inclination {rec.inclination} outside [0, 180]")
    for what, value in (("raan", rec.raan), ("arg_perigee", rec.arg_perigee),
                        ("mean_anomaly", rec.mean_anomaly)):
        if not 0.0 <= value < 360.0:
            raise MalformedField(f"{what} {value} outside [0, 360)")
    if not 0.0 <= rec.eccentricity < 1.0:
        raise MalformedField(f"eccentricity {rec.eccentricity} outside [0, 1)")
    if not rec.mean_motion > 0 or not math.isfinite(rec.mean_motion):
        raise MalformedField(f"mean motion {rec.mean_motion} must be positive")
    if rec.period_minutes >= DEEP_SPACE_PERIOD_MIN:
        raise DeepSpaceUnsupported(
            f"period {rec.period_minutes:.1f} min >= {DEEP_SPACE_PERIOD_MIN:.0f} min (deep space)"
        )


# -- serialization -----------------------------------------------------------

def _format_exponent(value: float) -> str:
    """Encode a float into the 8-column implied-decimal exponent form."""
    if value == 0.0:
        return " 00000-0"
    sign = "-" if value < 0 else " "
    mag = abs(value)
    exp = math.floor(math.log10(mag)) + 1
    mant = round(mag / 10.0 ** exp * 1e5)
    if mant >= 100000:
        mant //= 10
        exp += 1
    if not -9 <= exp <= 9:
        raise ValueError(f"{value} cannot be encoded in TLE exponent notation")
    return f"{sign}{mant:05d}{'-' if exp < 0 else '+'}{abs(exp)}"


def _format_ndot(value: float) -> str:
    sign = "-" if value < 0 else " "
    return f"{sign}.{round(abs(value) * 1e8):08d}"


def format_tle(rec: TleRecord) -> tuple[str, str]:
    """Serialize a record back into its two 69-column lines (checksums regenerated)."""
    body1 = (
        f"1 {rec.norad_id:05d}{rec.classification} {rec.intl_designator:<8s} "
        f"{rec.epoch_year % 100:02d}{rec.epoch_day:012.8f} {_format_ndot(rec.mean_motion_dot)} "
        f"{_format_exponent(rec.mean_motion_ddot)} {_format_exponent(rec.bstar)} "
        f"{rec.ephemeris_type:1d} {rec.element_set_no:4d}"
    )
    body2 = (
        f"2 {rec.norad_id:05d} {rec.inclination:8.4f} {rec.raan:8.4f} "
        f"{round(rec.eccentricity * 1e7):07d} {rec.arg_perigee:8.4f} {rec.mean_anomaly:8.4f} "
        f"{rec.mean_motion:11.8f}{rec.rev_at_epoch:5d}"
    )
    return body1 + str(checksum(body1)), body2 + str(checksum(body2))


# -- files -------------------------------------------------------------------

@dataclass
class ParseFailure:
    line_no: int
    error: TleError

    def __str__(self):
        return f"line {self.line_no}: {type(self.error).__name__}: {self.error}"


@dataclass
class ParseReport:
    failures: list[ParseFailure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __len__(self):
        return len(self.failures)


def parse_tle_text(text: str) -> tuple[list[TleRecord], ParseReport]:
    """Parse concatenated TLE entries; bad entries land in the report with their line numbers."""
    records: list[TleRecord] = []
    report = ParseReport()
    lines = text.splitlines()
    i = 0
    pending_name: tuple[int, str] | None = None
    while i < len(lines):
        raw = lines[i]
        if not raw.strip():
            i += 1
            continue
        if raw.startswith("1 "):
            start = pending_name[0] if pending_name else i + 1
            if i + 1 >= len(lines) or not lines[i + 1].startswith("2 "):
                report.failures.append(ParseFailure(i + 1, MalformedEntry("line 1 without a following line 2")))
                pending_name = None
                i += 1
                continue
            entry = ([pending_name[1]] if pending_name else []) + [raw, lines[i + 1]]
            try:
                records.append(parse_tle(entry))
            except TleError as exc:
                report.failures.append(ParseFailure(start, exc))
            pending_name = None
            i += 2
            continue
        if raw.startswith("2 "):
            report.failures.append(ParseFailure(i + 1, MalformedEntry("line 2 without a preceding line 1")))
            pending_name = None
            i += 1
            continue
        if pending_name is not None:
            report.failures.append(ParseFailure(pending_name[0], MalformedEntry("name line without element lines")))
        pending_name = (i + 1, raw)
        i += 1
    if pending_name is not None:
        report.failures.append(ParseFailure(pending_name[0], MalformedEntry("name line without element lines")))
    return records, report


def load_tle_file(path: str | Path) -> tuple[list[TleRecord], ParseReport]:
    """Read a TLE file. Raises ``OSError`` if unreadable."""
    return parse_tle_text(Path(path).read_text(encoding="utf-8"))
