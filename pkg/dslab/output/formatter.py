"""Artifact writers: CSV tables and JSON documents with embedded run metadata."""

import hashlib
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from ..models import AppConfig

FLOAT_FORMAT = "%.12e"


def _format_value(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    return str(value)


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def config_metadata(config: Optional[AppConfig]) -> dict:
    return config.model_dump(mode="json") if config is not None else {}


def format_csv(columns: Sequence[str], rows: Iterable[Sequence], config: Optional[AppConfig] = None) -> str:
    """Render a CSV table.

    The first line is ``#`` followed by a JSON object with:
    - the full configuration
    - the sha256 of the header and data rows below it
    Floats use a fixed format so repeated runs give identical bytes.
    """
    body_lines = [",".join(columns)]
    for row in rows:
        body_lines.append(",".join(_format_value(v) for v in row))
    body = "\n".join(body_lines) + "\n"
    meta = {"config": config_metadata(config), "content_sha256": content_hash(body)}
    return "# " + json.dumps(meta, sort_keys=True) + "\n" + body


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def format_json(data: dict, config: Optional[AppConfig] = None, extra_metadata: Optional[dict] = None) -> str:
    """{"metadata": {...}, "data": {...}} with sorted keys."""
    data = _jsonable(data)
    payload = json.dumps(data, sort_keys=True)
    metadata = {"config": config_metadata(config), "content_sha256": content_hash(payload)}
    if extra_metadata:
        metadata.update(_jsonable(extra_metadata))
    return json.dumps({"metadata": metadata, "data": data}, sort_keys=True, indent=2) + "\n"


def read_csv_metadata(text: str) -> dict:
    first = text.splitlines()[0]
    if not first.startswith("#"):
        raise ValueError("missing metadata line")
    return json.loads(first[1:].strip())


def verify_csv_hash(text: str) -> bool:
    meta = read_csv_metadata(text)
    body = text.split("\n", 1)[1]
    return meta["content_sha256"] == content_hash(body)


def write_artifact(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
