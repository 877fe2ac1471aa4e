"""CSV reports with a reproducibility header."""

import csv
import hashlib
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from . import __version__

logger = logging.getLogger(__name__)

EXCLUDED_FROM_HASH = ("out", "workers")


def config_hash(config: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON of a configuration, output path and worker count excluded."""
    canonical = {k: v for k, v in config.items() if k not in EXCLUDED_FROM_HASH}
    payload = json.dumps(canonical, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class Report:
    """Table of named columns preceded by ``# key=value`` header lines."""

    columns: List[str]
    rows: List[Sequence[Any]] = field(default_factory=list)
    header: Dict[str, Any] = field(default_factory=dict)
    footer: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def for_config(cls, columns: List[str], config: Dict[str, Any]) -> "Report":
        header = {
            "seed": config.get("seed"),
            "version": __version__,
            "config_hash": config_hash(config),
        }
        if config.get("trials") is not None:
            header["trials"] = config["trials"]
        return cls(columns=columns, header=header)

    def add(self, *cells: Any) -> None:
        if len(cells) != len(self.columns):
            raise ValueError(f"row has {len(cells)} cells, report has {len(self.columns)} columns")
        self.rows.append(cells)

    def header_lines(self) -> List[str]:
        return [f"# {key}={value}" for key, value in self.header.items()]

    def body(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_cell(v) for v in row])
        return buffer.getvalue()

    def render(self) -> str:
        lines = self.header_lines()
        text = ("\n".join(lines) + "\n" if lines else "") + self.body()
        if self.footer:
            text += "# " + ",".join(f"{key}={value}" for key, value in self.footer.items()) + "\n"
        return text

    def write(self, path: Optional[Union[str, Path]] = None) -> None:
        """Write to ``path``, or to stdout when no path is given."""
        text = self.render()
        if path is None:
            sys.stdout.write(text)
            return
        Path(path).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {len(self.rows)} rows to {path}")
