"""JSON encoding of complex arrays and schema validation of verifier files."""

import json
import sys
from functools import lru_cache
from pathlib import Path
from typing import Any, List, Optional

import jsonschema
import numpy as np

# Ensure parent directory is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))

from config.settings import settings
from infrastructure.exact import evaluate
from utils.errors import DimensionError, ParseError

STAR = "*"


def encode_complex(z: complex) -> List[float]:
    """[re, im] pair of a complex scalar."""
    z = complex(z)
    return [float(z.real), float(z.imag)]


def encode_vector(x) -> List[List[float]]:
    return [encode_complex(z) for z in np.asarray(x, dtype=complex).reshape(-1)]


def encode_matrix(A) -> List[List[List[float]]]:
    A = np.asarray(A, dtype=complex)
    return [encode_vector(row) for row in A]


def decode_complex(value: Any) -> complex:
    """
    Decode a scalar written as [re, im], a number, or an exact expression string.

    Each of re and im may itself be an exact expression string.
    """
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ParseError(f"Complex scalar must be a [re, im] pair, got {len(value)} entries")
        return complex(evaluate(value[0]), evaluate(value[1]))
    return complex(evaluate(value), 0.0)


def decode_vector(values: Any, name: str = "vector") -> np.ndarray:
    if not isinstance(values, list) or not values:
        raise ParseError(f"{name} must be a non-empty list of [re, im] pairs")
    return np.array([decode_complex(v) for v in values], dtype=complex)


def decode_matrix(rows: Any, name: str = "matrix", allow_star: bool = False) -> List[Optional[np.ndarray]]:
    """
    Decode a matrix given as a list of rows.

    With ``allow_star`` a row may be the string "*" (left unspecified); such
    rows decode to None.
    """
    if not isinstance(rows, list) or not rows:
        raise ParseError(f"{name} must be a non-empty list of rows")
    decoded = []
    width = None
    for idx, row in enumerate(rows):
        if row == STAR:
            if not allow_star:
                raise ParseError(f"{name} row {idx} is unspecified but stars are not allowed here")
            decoded.append(None)
            continue
        vec = decode_vector(row, f"{name} row {idx}")
        if width is not None and vec.size != width:
            raise DimensionError(f"{name} row {idx} has {vec.size} entries, expected {width}")
        width = vec.size
        decoded.append(vec)
    return decoded


def decode_dense_matrix(rows: Any, name: str = "matrix") -> np.ndarray:
    return np.vstack(decode_matrix(rows, name))


def _to_builtin(obj: Any):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return encode_complex(obj)
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def dumps(obj: Any, indent: Optional[int] = 2) -> str:
    """json.dumps that understands numpy scalars, arrays and complex numbers."""
    return json.dumps(obj, indent=indent, default=_to_builtin)


def loads(text: str, name: str = "document") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{name} is not valid JSON: {e}") from e


@lru_cache(maxsize=None)
def load_schema(schema_name: str, schema_dir: Optional[str] = None) -> dict:
    """Load ``<schema_name>.schema.json`` from the schema directory."""
    directory = Path(schema_dir) if schema_dir else Path(settings.schema_dir)
    path = directory / f"{schema_name}.schema.json"
    if not path.exists():
        raise ParseError(f"Schema not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def validate(obj: Any, schema_name: str) -> None:
    """Validate a decoded JSON document, raising ParseError on the first violation."""
    schema = load_schema(schema_name)
    try:
        jsonschema.validate(instance=obj, schema=schema)
    except jsonschema.ValidationError as e:
        location = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ParseError(f"{schema_name} file invalid at {location}: {e.message}") from e
