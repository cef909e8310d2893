"""
Canonical round-log CSV: ingestion with row-level validation, and emission.

Schema (UTF-8, LF line endings):
    session_id,game_condition,round,sender_id,receiver_id,amount_sent,amount_returned

External datasets are adapted to this schema by renaming their columns; the
multiplier and endowment used for validation are configurable.
"""

import io
import json
import logging
import re
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, List, Sequence, Union

import pandas as pd

from config import ENDOWMENT, MACHINE_FLOAT_FORMAT, MULTIPLIER
from tools.errors import DataFormatError, ProtocolError
from tools.game_engine import GameCondition, RoundRecord, settle_exchange, validate_exchange

logger = logging.getLogger(__name__)

ROUND_LOG_COLUMNS = [
    "session_id", "game_condition", "round", "sender_id", "receiver_id", "amount_sent", "amount_returned",
]
_INTEGER = re.compile(r"^\d+$")
_PARSER_LINE = re.compile(r"line (\d+)")
_CONDITIONS = {c.value: c for c in GameCondition}


def _integer(value: str, line: int, column: str) -> int:
    text = value.strip()
    if not _INTEGER.match(text):
        raise DataFormatError(f"expected a non-negative integer, got {value!r}", line=line, column=column)
    return int(text)


def parse_round_log(path: Union[str, Path], multiplier: int = MULTIPLIER, endowment: int = ENDOWMENT) -> List[RoundRecord]:
    """
    Reads and validates a round-log CSV.

    Args:
        path: CSV file in the canonical schema.
        multiplier: Factor applied to the sent amount (bounds the return).
        endowment: Most a sender may send.

    Returns:
        RoundRecords in file order.

    Raises:
        DataFormatError: malformed header or cell (with line number and column).
        ProtocolError: a row breaks the game rules (row = file line number).
    """
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        line = raw[:e.start].count(b"\n") + 1
        raise DataFormatError(f"not valid UTF-8 (byte 0x{raw[e.start]:02x})", line=line) from e
    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        raise DataFormatError("file is empty; expected a header row", line=1) from e
    except pd.errors.ParserError as e:
        match = _PARSER_LINE.search(str(e))
        raise DataFormatError(f"malformed CSV row ({e})", line=int(match.group(1)) if match else None) from e

    missing = [c for c in ROUND_LOG_COLUMNS if c not in frame.columns]
    if missing:
        raise DataFormatError(f"missing columns {missing}; expected header {','.join(ROUND_LOG_COLUMNS)}", line=1)

    if frame.empty:
        logger.warning(f"Round log {path} has a header but no rows")
        return []

    records = []
    for offset, row in enumerate(frame[ROUND_LOG_COLUMNS].itertuples(index=False)):
        line = offset + 2  # header is line 1
        session_id, condition, round_text, sender_id, receiver_id, sent_text, returned_text = row
        if not session_id.strip():
            raise DataFormatError("session_id is empty", line=line, column="session_id")
        if condition not in _CONDITIONS:
            raise DataFormatError(
                f"unknown condition {condition!r}; expected one of {sorted(_CONDITIONS)}", line=line, column="game_condition"
            )
        round_index = _integer(round_text, line, "round")
        if round_index < 1:
            raise DataFormatError("round numbers start at 1", line=line, column="round")
        if not sender_id.strip() or not receiver_id.strip():
            raise DataFormatError("participant ids must not be empty", line=line, column="sender_id" if not sender_id.strip() else "receiver_id")
        if sender_id == receiver_id:
            raise ProtocolError(f"line {line}: participant {sender_id} cannot play against themselves", field="receiver_id", row=line)
        sent = _integer(sent_text, line, "amount_sent")
        returned = _integer(returned_text, line, "amount_returned")
        try:
            validate_exchange(sent, returned, endowment, multiplier)
        except ProtocolError as e:
            raise ProtocolError(f"line {line}: {e}", field=e.field, row=line) from e
        records.append(
            settle_exchange(session_id, _CONDITIONS[condition], round_index, sender_id, receiver_id, sent, returned, multiplier)
        )

    logger.info(f"Parsed {len(records)} exchanges from {path}")
    return records


def write_round_log(records: Iterable[RoundRecord], path: Union[str, Path]) -> Path:
    """Writes records in the canonical schema, in the given order."""
    frame = pd.DataFrame(
        [
            (
                r.session_id,
                getattr(r.game_condition, "value", r.game_condition),
                r.round_index,
                r.sender_id,
                r.receiver_id,
                r.amount_sent,
                r.amount_returned,
            )
            for r in records
        ],
        columns=ROUND_LOG_COLUMNS,
    )
    path = Path(path)
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    logger.info(f"Wrote {len(frame)} exchanges to {path}")
    return path


def write_rows(rows: Sequence, columns: List[str], path: Union[str, Path], fmt: str = "csv") -> Path:
    """
    Writes dataclass rows (trajectories, reputations, measures) as CSV or JSON.

    CSV floats use 17 significant digits; JSON uses shortest round-trip reprs.
    """
    records = [asdict(row) for row in rows]
    path = Path(path)
    if fmt == "json":
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump([{c: rec[c] for c in columns} for rec in records], f, indent=2)
            f.write("\n")
    else:
        frame = pd.DataFrame(records, columns=columns)
        frame.to_csv(path, index=False, lineterminator="\n", float_format=MACHINE_FLOAT_FORMAT, encoding="utf-8")
    logger.info(f"Wrote {len(records)} rows to {path}")
    return path
