"""
Helpers for the JSON artifacts written by lureid.

Python's float repr is the shortest string that round-trips, so `json` already
serializes doubles losslessly. NaN and infinity are rejected on the way out.
"""

import hashlib
import json
import pathlib
from typing import TypeVar

from lureid.utils.exceptions import DatasetFormatError, SchemaVersionError

PathLike = TypeVar("PathLike", str, pathlib.Path)


def write_json(obj, path: PathLike) -> None:
    """Writes obj as indented JSON. Non-finite floats raise ValueError."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(obj, f, indent=1, allow_nan=False)
        f.write("\n")


def read_json(path: PathLike):
    """Reads a JSON document, turning decode failures into DatasetFormatError with a location."""
    path = pathlib.Path(path)
    with open(path) as f:
        text = f.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise DatasetFormatError(e.msg, path=str(path), line=e.lineno, column=e.colno) from e


def check_schema_version(doc, supported: int, kind: str, path=None) -> None:
    """Raise unless doc is a mapping declaring `schema_version == supported`."""
    if not isinstance(doc, dict):
        raise DatasetFormatError(f"{kind} document must be a JSON object", path=path)
    if "schema_version" not in doc:
        raise DatasetFormatError(f"{kind} document has no 'schema_version'", path=path)
    if doc["schema_version"] != supported:
        raise SchemaVersionError(
            f"{kind} schema_version {doc['schema_version']!r} is not supported (expected {supported})"
        )


def content_hash(path: PathLike) -> str:
    """SHA-1 of a file, computed like `git hash-object`."""
    data = pathlib.Path(path).read_bytes()
    h = hashlib.sha1()
    h.update(f"blob {len(data)}\0".encode())
    h.update(data)
    return h.hexdigest()
