"""Run manifests: what went in, what came out, and with which parameters."""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import MissingUpstream

MANIFEST_NAME = "manifest.json"


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _rel(path: Path, root: Path) -> str:
    try:
        return Path(path).resolve().relative_to(root.resolve()).as_posix()
    except ValueError:
        return Path(path).name


def write_manifest(directory: str | Path, command: str, parameters: dict, inputs=(), outputs=(),
                   extra: dict | None = None, root: Path | None = None) -> Path:
    """Write ``manifest.json`` atomically; paths are recorded relative to ``root`` when possible."""
    directory = Path(directory)
    root = Path(root) if root is not None else directory
    doc = {
        "command": command,
        "toolkit_version": __version__,
        "created_at": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "parameters": parameters,
        "inputs": {_rel(p, root): sha256_file(p) for p in sorted(map(Path, inputs)) if Path(p).is_file()},
        "outputs": {_rel(p, directory): sha256_file(p) for p in sorted(map(Path, outputs))},
    }
    if extra:
        doc.update(extra)
    target = directory / MANIFEST_NAME
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".manifest-")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    os.replace(tmp, target)
    return target


def read_manifest(directory: str | Path, command: str, hint: str) -> dict:
    """Load and verify an upstream manifest, raising :class:`MissingUpstream` with ``hint``."""
    path = Path(directory) / MANIFEST_NAME
    if not path.exists():
        raise MissingUpstream(f"no {command} output in {directory}", hint)
    doc = json.loads(path.read_text(encoding="utf-8"))
    for rel, digest in doc.get("outputs", {}).items():
        f = Path(directory) / rel
        if not f.exists() or sha256_file(f) != digest:
            raise MissingUpstream(f"{command} output {f} is missing or changed since it was written", hint)
    return doc
