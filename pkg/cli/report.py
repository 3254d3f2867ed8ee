"""
report.py - RunReport and its serializations (JSON, CSV, plotdata).

How this works (the big picture):
1. A command fills a RunReport: the config echo, one record per check
   (with the module/operation/inputs that produced it), verdicts, and
   optional tables (-> CSV) and series (-> plotdata).
2. Everything is normalized to plain JSON values first. numpy scalars and
   arrays become Python numbers and lists, complex numbers become [re, im],
   and non-finite floats become the strings "inf", "-inf", "nan".
3. Run-dependent fields (timestamp, wall-clock seconds) live in a single
   "volatile" block. The digest is SHA-256 over the canonical JSON (sorted
   keys, no extra whitespace) without that block, and two runs of the same
   config write byte-identical JSON outside it.

File formats:
- <command>.json           the whole report, sorted keys, indent 2
- <command>_<table>.csv    header row, numbers with 17 significant digits
- <series>.dat             whitespace columns, '#' header comments
"""

import csv
import hmac
import json
import math
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
from cryptography.hazmat.primitives import hashes

logger = logging.getLogger(__name__)


# Keys left out of the digest (they change from run to run)
VOLATILE_KEYS = ("volatile", "digest")


def plain(value: Any) -> Any:
    """Convert to JSON-safe Python values."""
    if isinstance(value, Enum):
        return plain(value.value)
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [plain(float(value.real)), plain(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def format_number(value: Any) -> str:
    """17 significant digits, '.' decimal, non-finite as inf/-inf/nan."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    if value is None:
        return ""
    return str(value)


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)

    def add(self, *row):
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} values, table has {len(self.columns)} columns")
        self.rows.append(list(row))


@dataclass
class RunReport:
    command: str
    config: dict
    version: str
    seed: int = 0
    records: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))
    wall_clock_seconds: float = 0.0

    def record(self, module: str, operation: str, inputs: dict, result: Any):
        """Append one check result with its provenance."""
        self.records.append({
            "module": module,
            "operation": operation,
            "inputs": plain(inputs),
            "result": plain(result),
        })

    def table(self, name: str, columns: list) -> Table:
        self.tables[name] = Table(list(columns))
        return self.tables[name]

    def curve(self, name: str, columns: list) -> Table:
        self.series[name] = Table(list(columns))
        return self.series[name]

    def to_dict(self) -> dict:
        body = {
            "command": self.command,
            "config": plain(self.config),
            "version": self.version,
            "seed": self.seed,
            "records": plain(self.records),
            "verdicts": plain(self.verdicts),
            "volatile": {
                "timestamp": self.timestamp,
                "wall_clock_seconds": plain(self.wall_clock_seconds),
            },
        }
        body["digest"] = report_digest(body)
        return body


# ----------------------------------------------------------------------
# Digest
# ----------------------------------------------------------------------

def _canonical(report: dict) -> bytes:
    stable = {k: v for k, v in report.items() if k not in VOLATILE_KEYS}
    return json.dumps(plain(stable), sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")


def report_digest(report: dict) -> str:
    """SHA-256 hex digest of the report without its volatile fields."""
    digest = hashes.Hash(hashes.SHA256())
    digest.update(_canonical(report))
    return digest.finalize().hex()


def verify_report_digest(report: dict) -> bool:
    """Recompute the digest and compare it in constant time with the stored one."""
    stored = report.get("digest")
    if not isinstance(stored, str):
        return False
    return hmac.compare_digest(report_digest(report), stored)


# ----------------------------------------------------------------------
# Writers
# ----------------------------------------------------------------------

def write_json(report: RunReport, out_dir: Path) -> Path:
    path = Path(out_dir) / f"{report.command}.json"
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
    return path


def write_csv(report: RunReport, out_dir: Path) -> list:
    paths = []
    for name, table in report.tables.items():
        path = Path(out_dir) / f"{report.command}_{name}.csv"
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(table.columns)
            for row in table.rows:
                writer.writerow([format_number(v) for v in row])
        paths.append(path)
    return paths


def write_plotdata(report: RunReport, out_dir: Path) -> list:
    paths = []
    for name, table in report.series.items():
        path = Path(out_dir) / f"{name}.dat"
        lines = [f"# fiberband {report.command} {name}", "# " + " ".join(table.columns)]
        lines += [" ".join(format_number(v) for v in row) for row in table.rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


WRITERS = {
    "json": write_json,
    "csv": write_csv,
    "plotdata": write_plotdata,
}


def write_report(report: RunReport, out_dir, formats) -> list:
    """Write every requested format into out_dir (created if needed)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        result = WRITERS[fmt](report, out_dir)
        written.extend(result if isinstance(result, list) else [result])
    logger.info("wrote %d file(s) to %s", len(written), out_dir)
    return written


def load_report(path) -> dict:
    """Read a JSON report back (non-finite values stay as strings)."""
    return json.loads(Path(path).read_text(encoding="utf-8"))
