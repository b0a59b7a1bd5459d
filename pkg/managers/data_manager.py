# managers/data_manager.py
import json
import logging
import math
import os
import tempfile
from typing import Any, Dict, Iterable, Sequence

import numpy as np

from models.scenario import ScenarioConfig
from physics.errors import ConfigParseError

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 17


def format_float(value: float) -> str:
    """Locale-independent rendering with 17 significant digits (round-trip exact)."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{SIGNIFICANT_DIGITS}g}"


def _jsonable(value: Any) -> Any:
    """Convert a report payload to plain JSON types; non-finite floats become strings."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else format_float(value)
    return value


class DataManager:
    """Handles scenario loading and deterministic, atomic output writing."""

    def __init__(self, output_dir: str = "out"):
        """Initialize the data manager with the output directory."""
        self.output_dir = output_dir
        os.makedirs(self.output_dir, exist_ok=True)

    @staticmethod
    def load_scenario(file_path: str) -> ScenarioConfig:
        """
        Load and validate a scenario file.

        Raises:
            ConfigParseError: if the file is missing or not valid JSON
            pydantic.ValidationError: if the document does not match the schema
        """
        return ScenarioConfig.model_validate(DataManager.load_document(file_path))

    @staticmethod
    def load_document(file_path: str) -> Dict[str, Any]:
        """Raw JSON object of a scenario file, for merging command-line overrides."""
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                document = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigParseError(f"cannot read scenario {file_path}: {e}") from e
        if not isinstance(document, dict):
            raise ConfigParseError(f"scenario {file_path} must be a JSON object")
        return document

    def resolve(self, relative_path: str) -> str:
        return os.path.join(self.output_dir, relative_path)

    def _write_atomic(self, relative_path: str, text: str) -> str:
        target = self.resolve(relative_path)
        directory = os.path.dirname(target) or "."
        os.makedirs(directory, exist_ok=True)
        fd, temp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(target))
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
            os.replace(temp_path, target)
        except BaseException:
            if os.path.exists(temp_path):
                os.remove(temp_path)
            raise
        logger.debug(f"Wrote {target}")
        return target

    def write_csv(self, relative_path: str, header: Sequence[str], columns: Sequence[Iterable[float]]) -> str:
        """
        Write equally long numeric columns as CSV (',' separator, '\\n' endings).

        Returns:
            Path of the written file
        """
        columns = [list(c) for c in columns]
        lengths = {len(c) for c in columns}
        if len(header) != len(columns) or len(lengths) > 1:
            raise ValueError(f"{len(header)} header names for {len(columns)} columns of lengths {sorted(lengths)}")
        lines = [",".join(header)]
        lines.extend(",".join(format_float(v) for v in row) for row in zip(*columns))
        return self._write_atomic(relative_path, "\n".join(lines) + "\n")

    def write_json(self, relative_path: str, payload: Dict[str, Any]) -> str:
        """
        Write a report as JSON with sorted keys; non-finite values become the
        strings "inf", "-inf" and "nan".
        """
        return self._write_atomic(relative_path, render_json(payload) + "\n")


def render_json(payload: Dict[str, Any]) -> str:
    """
    Serialize with indent=2 and sorted keys. Finite floats are written through
    format_float, so JSON and CSV share the 17-significant-digit rendering.
    """
    return _render(_jsonable(payload), 0)


def _render(value: Any, level: int) -> str:
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, dict):
        entries = [f"{json.dumps(key)}: {_render(value[key], level + 1)}" for key in sorted(value)]
        return _block("{", "}", entries, level)
    if isinstance(value, list):
        return _block("[", "]", [_render(v, level + 1) for v in value], level)
    return json.dumps(value)


def _block(opening: str, closing: str, entries: Sequence[str], level: int) -> str:
    if not entries:
        return opening + closing
    indent = "  " * (level + 1)
    body = ",\n".join(indent + entry for entry in entries)
    return f"{opening}\n{body}\n{'  ' * level}{closing}"
