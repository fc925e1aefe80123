"""Simulated GP observations with provenance, and their CSV/JSON serialization."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError


@dataclass
class SampleBatch:
    """An (n, d) matrix of simulated observations plus provenance metadata."""

    data: np.ndarray
    seed: int | None
    representation: str
    params: dict = field(default_factory=dict)
    stream: int = 0

    @property
    def n(self) -> int:
        return int(self.data.shape[0])

    @property
    def d(self) -> int:
        return int(self.data.shape[1])

    def sidecar(self) -> dict:
        return {
            "seed": self.seed,
            "stream": self.stream,
            "n": self.n,
            "d": self.d,
            "representation": self.representation,
            "params": self.params,
        }

    def to_csv(self, path=None) -> str | None:
        """Write ``x1..xd`` CSV ('-inf' marks atoms); returns the text if no path."""
        text = format_csv(self.data)
        if path is None:
            return text
        Path(path).write_text(text, encoding="utf-8")
        return None

    def write(self, csv_path, sidecar_path=None):
        self.to_csv(csv_path)
        sidecar_path = sidecar_path or str(csv_path) + ".json"
        Path(sidecar_path).write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True),
                                      encoding="utf-8")

    @classmethod
    def read(cls, csv_path, sidecar_path=None) -> "SampleBatch":
        data = parse_csv(Path(csv_path).read_text(encoding="utf-8"))
        meta = {}
        sidecar_path = sidecar_path or str(csv_path) + ".json"
        if Path(sidecar_path).exists():
            meta = json.loads(Path(sidecar_path).read_text(encoding="utf-8"))
        return cls(data, meta.get("seed"), meta.get("representation", "unknown"),
                   meta.get("params", {}), meta.get("stream", 0))


def format_csv(data: np.ndarray, header: list[str] | None = None) -> str:
    data = np.asarray(data, dtype=float)
    d = data.shape[1]
    header = header or [f"x{j + 1}" for j in range(d)]
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in data:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def parse_csv(text: str) -> np.ndarray:
    """Parse header + numeric rows; a malformed row raises DomainError naming its line."""
    lines = text.splitlines()
    if not lines:
        raise DomainError("empty CSV input (a header line is required)")
    d = len(lines[0].split(","))
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != d:
            raise DomainError(f"line {lineno}: expected {d} fields, found {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise DomainError(f"line {lineno}: non-numeric field in {line!r}") from None
    out = np.array(rows, dtype=float).reshape(len(rows), d)
    if np.any(np.isnan(out)):
        raise DomainError("nan values are not allowed in sample files")
    return out
