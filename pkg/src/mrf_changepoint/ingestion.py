"""Roll-call style vote matrices: parsing, conformity filtering and imputation.

Input layout
------------
Votes CSV: a header row ``date,<seat_1>,...,<seat_p>``, one row per vote in
temporal order, cells ``1`` (yes), ``0`` (no) or the missing marker.

Party CSV: columns ``seat,start,end,party`` with ISO dates; the party of a
seat on a given date is the row whose inclusive ``[start, end]`` holds it.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass

import numpy as np

from .core import Dataset, MRFError

MISSING = -1
STRATEGIES = ("own-party-majority", "winning-majority", "opposite-party-majority")


class IngestionError(MRFError):
    pass


@dataclass(frozen=True)
class RawVotes:
    votes: np.ndarray          # T x p int8: 1 yes, 0 no, -1 missing
    dates: tuple[str, ...]
    seats: tuple[str, ...]
    parties: np.ndarray | None = None   # T x p object array, None where unknown

    def __post_init__(self):
        v = np.asarray(self.votes, dtype=np.int8)
        if v.ndim != 2:
            raise IngestionError("votes must be a 2-d matrix")
        if not np.isin(v, (MISSING, 0, 1)).all():
            raise IngestionError("vote cells must be 1, 0 or missing")
        if len(self.dates) != v.shape[0] or len(self.seats) != v.shape[1]:
            raise IngestionError("date/seat labels do not match the vote matrix")
        if self.parties is not None and np.shape(self.parties) != v.shape:
            raise IngestionError("party labels do not match the vote matrix")
        object.__setattr__(self, "votes", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.votes.shape

    def take_rows(self, keep: np.ndarray) -> "RawVotes":
        idx = np.nonzero(keep)[0]
        return RawVotes(
            self.votes[idx], tuple(self.dates[i] for i in idx), self.seats,
            None if self.parties is None else self.parties[idx],
        )


def read_votes_csv(path, na_marker: str = "NA") -> RawVotes:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: empty file") from None
        seats = tuple(h.strip() for h in header[1:])
        if not seats:
            raise IngestionError(f"{path}: no seat columns")
        dates, rows = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise IngestionError(f"{path}:{lineno}: expected {len(header)} fields")
            dates.append(rec[0].strip())
            row = []
            for cell in rec[1:]:
                cell = cell.strip()
                if cell == na_marker or cell == "":
                    row.append(MISSING)
                elif cell in ("1", "0"):
                    row.append(int(cell))
                else:
                    raise IngestionError(f"{path}:{lineno}: bad vote cell {cell!r}")
            rows.append(row)
    if not rows:
        raise IngestionError(f"{path}: no vote rows")
    return RawVotes(np.array(rows, dtype=np.int8), tuple(dates), seats)


def read_party_csv(path) -> list[tuple[str, dt.date, dt.date, str]]:
    spans = []
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.DictReader(fh), start=2):
            try:
                spans.append((rec["seat"].strip(), dt.date.fromisoformat(rec["start"].strip()),
                              dt.date.fromisoformat(rec["end"].strip()), rec["party"].strip()))
            except (KeyError, ValueError) as exc:
                raise IngestionError(f"{path}:{lineno}: {exc}") from None
    return spans


def attach_parties(raw: RawVotes, spans) -> RawVotes:
    """Resolve the occupant's party for every (vote, seat) cell."""
    by_seat: dict[str, list] = {}
    for seat, start, end, party in spans:
        by_seat.setdefault(seat, []).append((start, end, party))
    T, p = raw.shape
    parties = np.full((T, p), None, dtype=object)
    for t, label in enumerate(raw.dates):
        try:
            day = dt.date.fromisoformat(label)
        except ValueError:
            raise IngestionError(f"row {t + 1}: date {label!r} is not ISO formatted") from None
        for i, seat in enumerate(raw.seats):
            for start, end, party in by_seat.get(seat, ()):
                if start <= day <= end:
                    parties[t, i] = party
                    break
    return RawVotes(raw.votes, raw.dates, raw.seats, parties)


def conformity_filter(raw: RawVotes, max_conformity: float = 0.75) -> RawVotes:
    """Drop votes whose majority side holds at least ``max_conformity`` of the cast votes.

    Rows with no cast votes are dropped as well.
    """
    if not 0.5 < max_conformity <= 1:
        raise IngestionError("max_conformity must lie in (0.5, 1]")
    yes = (raw.votes == 1).sum(axis=1)
    no = (raw.votes == 0).sum(axis=1)
    cast = yes + no
    with np.errstate(invalid="ignore", divide="ignore"):
        share = np.maximum(yes, no) / cast
    keep = (cast > 0) & (share < max_conformity)
    if not keep.any():
        raise IngestionError("conformity filter removed every vote")
    return raw.take_rows(keep)


def _majority(votes: np.ndarray, tie: int) -> int:
    yes = int((votes == 1).sum())
    no = int((votes == 0).sum())
    if yes == no:
        return tie
    return 1 if yes > no else 0


def impute(raw: RawVotes, strategy: str = "own-party-majority", tie: int = 1) -> Dataset:
    """Replace missing cells by a majority position on the same vote.

    ``own-party-majority`` uses members of the seat's party, ``opposite-party-majority``
    members of any other party, ``winning-majority`` all members.  Ties go to
    ``tie`` (default yes).  Output codes: yes -> 1, no -> 0.
    """
    if strategy not in STRATEGIES:
        raise IngestionError(f"strategy must be one of {STRATEGIES}")
    if tie not in (0, 1):
        raise IngestionError("tie must be 0 or 1")
    needs_party = strategy != "winning-majority"
    if needs_party and raw.parties is None:
        raise IngestionError(f"strategy {strategy!r} needs party labels")
    out = raw.votes.astype(np.int32)
    missing_rows = np.nonzero((raw.votes == MISSING).any(axis=1))[0]
    for t in missing_rows:
        row = raw.votes[t]
        cast = row != MISSING
        if not needs_party:
            if not cast.any():
                raise IngestionError(f"row {t + 1} ({raw.dates[t]}): no cast votes to impute from")
            out[t, ~cast] = _majority(row[cast], tie)
            continue
        party_row = raw.parties[t]
        for i in np.nonzero(~cast)[0]:
            own = party_row[i]
            if own is None:
                raise IngestionError(
                    f"row {t + 1} ({raw.dates[t]}): seat {raw.seats[i]} has no party label")
            if strategy == "own-party-majority":
                ref = cast & (party_row == own)
            else:
                ref = cast & (party_row != own) & (party_row != None)  # noqa: E711
            if not ref.any():
                raise IngestionError(
                    f"row {t + 1} ({raw.dates[t]}): no reference votes for seat {raw.seats[i]}")
            out[t, i] = _majority(row[ref], tie)
    return Dataset(out, raw.seats, raw.dates)
