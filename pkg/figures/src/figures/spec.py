"""Figure specifications and input-schema validation."""

from __future__ import annotations

import glob
import json
from dataclasses import dataclass
from pathlib import Path

FIGURE_KINDS = ("fit", "dynamics", "longtime", "rwa-compare", "counterterm",
                "spectral", "adiabatic")

TRAJECTORY_COLUMNS = ["time", "rescaled_time", "concurrence",
                      "concurrence_stderr"]
SX_COLUMNS = ["s", "x", "S_exact", "S_expansion", "S_quadrature"]
FIT_COLUMNS = ["tau", "bcf_re", "bcf_im", "fit_re", "fit_im", "abs_err"]


class SchemaError(ValueError):
    """Input does not match the documented schema (columns, sidecar, hash)."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render from which files.

    ``inputs`` are paths or globs, resolved relative to the spec file's
    directory when loaded from disk.  ``rescaled_time`` switches the time
    axis of dynamics-like figures; ``yscale`` is linear or log.
    """

    figure: str
    inputs: tuple
    out_name: str | None = None
    panels: tuple | None = None
    yscale: str = "linear"
    rescaled_time: bool = True

    def __post_init__(self):
        if self.figure not in FIGURE_KINDS:
            raise SchemaError(f"unknown figure kind {self.figure!r}; "
                              f"expected one of {FIGURE_KINDS}")
        if self.yscale not in ("linear", "log"):
            raise SchemaError(f"yscale must be linear or log, got {self.yscale!r}")

    @classmethod
    def load(cls, path) -> "FigureSpec":
        path = Path(path)
        doc = json.loads(path.read_text())
        base = path.parent
        raw_inputs = doc.get("inputs", [])
        if isinstance(raw_inputs, str):
            raw_inputs = [raw_inputs]
        resolved = []
        for pattern in raw_inputs:
            p = Path(pattern)
            if not p.is_absolute():
                p = base / pattern
            hits = sorted(glob.glob(str(p)))
            resolved.extend(hits)
        return cls(
            figure=doc["figure"],
            inputs=tuple(resolved),
            out_name=doc.get("out_name"),
            panels=tuple(doc["panels"]) if doc.get("panels") else None,
            yscale=doc.get("yscale", "linear"),
            rescaled_time=bool(doc.get("rescaled_time", True)),
        )


def read_csv_columns(path) -> dict:
    """Parse a comma CSV with a header row into float column arrays."""
    import numpy as np

    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty file")
    header = lines[0].split(",")
    try:
        data = np.array([[float(v) for v in line.split(",")]
                         for line in lines[1:]])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric cell ({exc})") from exc
    if data.ndim != 2 or data.shape[1] != len(header):
        raise SchemaError(f"{path}: ragged rows")
    return {name: data[:, i] for i, name in enumerate(header)}


def metadata_for(csv_path) -> dict:
    """Load the sidecar metadata; a present, nonempty config hash is required."""
    csv_path = Path(csv_path)
    candidates = [csv_path.with_name(csv_path.stem + ".meta.json"),
                  csv_path.with_suffix(".meta.json")]
    for cand in candidates:
        if cand.exists():
            meta = json.loads(cand.read_text())
            if not meta.get("config_hash"):
                raise SchemaError(f"{cand}: metadata lacks a config hash")
            return meta
    raise SchemaError(f"{csv_path}: no metadata sidecar found")


def require_columns(cols: dict, needed, path) -> None:
    missing = [c for c in needed if c not in cols]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")
