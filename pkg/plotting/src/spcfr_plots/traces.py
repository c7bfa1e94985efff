"""Parsing of solver trace CSVs.

The file contract: first line is the exact header below, ``# config`` and
``# summary`` comment lines carry the run's configuration echo and the
completion sentinel, data rows are comma-separated floats with strictly
increasing iteration counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_HEADER = "t,residual,residual_mbbg,regret_x,regret_y,max_stability_violation,wall_ms"
COLUMNS = CSV_HEADER.split(",")


class TraceFormatError(ValueError):
    pass


@dataclass
class TraceFile:
    path: Path
    config: dict[str, str]
    t: np.ndarray
    residual: np.ndarray
    columns: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def label(self) -> str:
        algo = self.config.get("algorithm", "?")
        d = self.config.get("scale_exp", "0")
        if algo == "oftrl_scaled":
            algo = f"oftrl_scaled({d})"
        updates = self.config.get("updates", "?")
        return f"{algo}/{updates}"

    @property
    def game(self) -> str:
        return self.config.get("game", self.path.stem)


def read_trace(path: str | Path) -> TraceFile:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise TraceFormatError(f"{path}: empty file")
    if lines[0] != CSV_HEADER:
        got = lines[0].split(",")
        for i, name in enumerate(COLUMNS):
            if i >= len(got) or got[i] != name:
                found = got[i] if i < len(got) else "<missing>"
                raise TraceFormatError(
                    f"{path}: header mismatch at column {i + 1}: "
                    f"expected {name!r}, found {found!r}"
                )
        raise TraceFormatError(f"{path}: header has extra columns")
    config: dict[str, str] = {}
    rows: list[list[float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("# config"):
            for token in line[len("# config") :].split():
                if "=" in token:
                    key, value = token.split("=", 1)
                    config[key] = value
            continue
        if line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != len(COLUMNS):
            raise TraceFormatError(
                f"{path}: line {lineno} has {len(parts)} fields, expected {len(COLUMNS)}"
            )
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise TraceFormatError(f"{path}: line {lineno}: {exc}") from None
    data = np.asarray(rows) if rows else np.zeros((0, len(COLUMNS)))
    t = data[:, 0]
    if t.size and np.any(np.diff(t) <= 0):
        raise TraceFormatError(f"{path}: iteration column is not strictly increasing")
    return TraceFile(
        path=path,
        config=config,
        t=t,
        residual=data[:, 1],
        columns={name: data[:, i] for i, name in enumerate(COLUMNS)},
    )


def fitted_slope(t: np.ndarray, residual: np.ndarray) -> float:
    """Log-log least-squares slope over the last half, positive entries only."""
    half = t.size // 2
    t, residual = t[half:], residual[half:]
    keep = residual > 0
    if keep.sum() < 2:
        raise TraceFormatError("not enough positive residuals to fit a slope")
    return float(np.polyfit(np.log(t[keep]), np.log(residual[keep]), 1)[0])
