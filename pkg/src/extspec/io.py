"""Deterministic JSON/CSV persistence and run manifests."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__

_FLOAT_TAG = "\x00f:"
_TAG_RE = re.compile('"\\\\u0000f:([^"]*)"')


def _tag(obj):
    if isinstance(obj, dict):
        return {str(k): _tag(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tag(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_tag(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return _FLOAT_TAG + format(x, ".17g")
    return obj


def dumps(obj) -> str:
    """JSON with every finite float written to 17 significant digits.

    Non-finite values become the strings "inf", "-inf", "nan" (strict JSON).
    """
    text = json.dumps(_tag(obj), indent=2, sort_keys=True, ensure_ascii=True)
    # .17g output such as "1e+20" or "3" is a valid JSON number as is
    return _TAG_RE.sub(lambda m: m.group(1), text) + "\n"


def _untag(obj):
    if isinstance(obj, dict):
        return {k: _untag(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_untag(v) for v in obj]
    if obj in ("inf", "-inf", "nan"):
        return float(obj)
    return obj


def loads(text: str):
    """Inverse of dumps; the non-finite strings come back as floats."""
    return _untag(json.loads(text))


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def read_json(path):
    return loads(Path(path).read_text())


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    version: str = __version__
    timestamp: str = field(
        default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    )
    inputs: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def add_input(self, path) -> None:
        self.inputs[str(path)] = file_digest(path)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "version": self.version,
            "timestamp": self.timestamp,
            "inputs": dict(self.inputs),
            "outputs": list(self.outputs),
        }


def manifest_name(command: str) -> str:
    return f"manifest_{command}.json"


class OutputDir:
    """Collects artifacts and writes the manifest that references them."""

    def __init__(self, root, manifest: RunManifest):
        self.root = Path(root)
        self.manifest = manifest
        self.name = manifest_name(manifest.command)
        self.root.mkdir(parents=True, exist_ok=True)

    def json(self, name: str, payload: dict) -> Path:
        payload = dict(payload, manifest=self.name)
        path = write_json(self.root / name, payload)
        self.manifest.outputs.append(name)
        return path

    def register(self, name: str) -> Path:
        self.manifest.outputs.append(name)
        return self.root / name

    def close(self) -> Path:
        self.manifest.outputs.sort()
        return write_json(self.root / self.name, self.manifest.to_dict())


def resolve_out_dir(flag_value, config_value=None, default: str = "extspec_out") -> str:
    """Explicit flag, then EXTSPEC_OUT, then the config file, then the default."""
    if flag_value:
        return flag_value
    env = os.environ.get("EXTSPEC_OUT")
    if env:
        return env
    return config_value or default


def load_schema(name: str) -> dict:
    """JSON schema shipped with the package, e.g. ``load_schema("eigen_result")``."""
    text = resources.files("extspec").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)
