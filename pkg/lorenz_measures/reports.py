"""JSON and CSV report writers."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence

import numpy as np
import orjson
from pydantic import BaseModel

from .config import SCHEMA

logger = logging.getLogger(__name__)

_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS


def to_plain(value: Any) -> Any:
    """Reduce models, dataclasses and arrays to JSON-ready values.

    Non-finite floats become the strings "inf", "-inf" and "nan".
    """
    if isinstance(value, BaseModel):
        return to_plain(value.model_dump())
    if is_dataclass(value) and not isinstance(value, type):
        return to_plain(asdict(value))
    if isinstance(value, Mapping):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def envelope(pipeline: str, result: Any = None, error: Optional[str] = None) -> Dict[str, Any]:
    return {"schema": SCHEMA, "pipeline": pipeline, "result": to_plain(result), "error": error}


def dumps(document: Any) -> bytes:
    return orjson.dumps(to_plain(document), option=_OPTIONS)


def write_json(path: Path, document: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(document))
    logger.info(f"Wrote report {path}")
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    logger.info(f"Wrote series {path}")
    return path
