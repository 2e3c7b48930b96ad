"""Serialization and atomic persistence of run reports, replay files and CSV series."""

import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from ciscurv import __version__
from ciscurv.errors import InputParseError

logger = logging.getLogger(__name__)

ARTIFACT = "ciscurv"


def encode_array(values: Any) -> Any:
    """numpy data -> JSON-ready nested lists; complex entries become [re, im]."""
    arr = np.asarray(values)
    if np.iscomplexobj(arr):
        pairs = np.stack([arr.real, arr.imag], axis=-1)
        return pairs.tolist()
    return arr.tolist()


def decode_array(data: Any) -> np.ndarray:
    """Inverse of encode_array for complex data."""
    arr = np.asarray(data, dtype=float)
    if arr.size == 0:
        return np.zeros(arr.shape[:-1] if arr.ndim > 1 else (0,), dtype=complex)
    return arr[..., 0] + 1j * arr[..., 1]


def sanitize(value: Any) -> Any:
    """Recursively convert numpy values and drop non-finite floats to None."""
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return sanitize(encode_array(value))
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, complex):
        return [sanitize(value.real), sanitize(value.imag)]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Path):
        return str(value)
    return value


def build_envelope(command: str, config: Dict[str, Any], result: Any) -> Dict[str, Any]:
    """Report envelope shared by every subcommand."""
    return {
        "artifact": ARTIFACT,
        "version": __version__,
        "command": command,
        "config": sanitize(config),
        "result": sanitize(result),
    }


def dumps(data: Any) -> str:
    return json.dumps(sanitize(data), indent=2, sort_keys=True) + "\n"


class ReportWriter:
    """Writes JSON and CSV outputs with temp-file-then-replace semantics."""

    def __init__(self, output: Optional[Path] = None):
        """Initialize the writer.

        Args:
            output: Report path; None means the caller prints to stdout.
        """
        self.output = Path(output) if output else None

    def write_report(self, command: str, config: Dict[str, Any], result: Any) -> str:
        """Render the report and write it atomically if a path is set.

        Returns:
            The rendered JSON text.
        """
        text = dumps(build_envelope(command, config, result))
        if self.output is not None:
            write_text_atomic(self.output, text)
            logger.info(f"Wrote {command} report to {self.output}")
        return text

    @staticmethod
    def write_json(path: Path, data: Any) -> None:
        write_text_atomic(Path(path), dumps(data))
        logger.debug(f"Saved JSON to {path}")

    @staticmethod
    def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
        write_text_atomic(Path(path), render_csv(header, rows))
        logger.info(f"Wrote CSV series to {path}")


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    return buffer.getvalue()


def _csv_cell(value: Any) -> Any:
    value = sanitize(value)
    return "" if value is None else value


def write_text_atomic(path: Path, text: str) -> None:
    """Write to a temp file next to path, then rename over it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_file = path.with_suffix(path.suffix + ".tmp")
    try:
        with open(temp_file, "w") as f:
            f.write(text)
        temp_file.replace(path)
    except IOError as e:
        logger.error(f"Failed to write {path}: {e}")
        raise


def load_json(path: Union[str, Path]) -> Any:
    """Load a JSON document, reporting the failure location on bad syntax.

    Raises:
        FileNotFoundError: If the file does not exist.
        InputParseError: If the file is not valid JSON.
    """
    path = Path(path)
    with open(path, "r") as f:
        text = f.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputParseError(
            f"invalid JSON in {path}: {e.msg}", path=str(path), line=e.lineno, column=e.colno
        ) from e


def read_csv(path: Union[str, Path]) -> List[Dict[str, str]]:
    """Read a CSV series written by write_csv."""
    with open(path, "r", newline="") as f:
        return list(csv.DictReader(f))
