"""Run artifacts: atomic writes, stable number formatting, and run manifests.

Every artifact-producing command writes a ``manifest.json`` recording the
resolved configuration, artifact names, and library versions.  All artifacts
except the manifest itself are byte-deterministic for a given configuration
(the manifest carries wall-clock fields); a manifest is sufficient to re-run
the command and reproduce the other artifacts byte-for-byte.
"""
from __future__ import annotations

import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PACKAGE_VERSION = "0.1.0"
MANIFEST_NAME = "manifest.json"


def fmt(x) -> str:
    """Shortest round-trip decimal form for floats; str() otherwise."""
    if isinstance(x, np.floating):  # np.float64 is a float subclass: check first
        return repr(float(x))
    if isinstance(x, float):
        return repr(x)
    return str(x)


def atomic_write_text(path: Path | str, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_json(path: Path | str, obj) -> None:
    atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def write_csv(path: Path | str, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


@dataclass
class RunManifest:
    command: str
    config: dict
    artifacts: dict = field(default_factory=dict)
    package_version: str = PACKAGE_VERSION
    python_version: str = field(default_factory=lambda: sys.version.split()[0])
    numpy_version: str = np.__version__
    created_unix: float = field(default_factory=time.time)
    duration_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "artifacts": self.artifacts,
            "package_version": self.package_version,
            "python_version": self.python_version,
            "numpy_version": self.numpy_version,
            "created_unix": self.created_unix,
            "duration_s": self.duration_s,
        }


def write_manifest(outdir: Path | str, manifest: RunManifest) -> Path:
    path = Path(outdir) / MANIFEST_NAME
    write_json(path, manifest.to_dict())
    return path


def load_manifest(path: Path | str) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    data = json.loads(path.read_text())
    for key in ("command", "config"):
        if key not in data:
            raise ValueError(f"manifest {path} missing {key!r}")
    return data
