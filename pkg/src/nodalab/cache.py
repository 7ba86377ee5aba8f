"""Content-addressed result cache keyed by module name and canonical parameters."""

from __future__ import annotations

import hashlib
import json
import os
import warnings
from pathlib import Path

ENV_CACHE_ROOT = "NODALAB_CACHE"
DEFAULT_ROOT = "cache"


def cache_root(root=None) -> Path:
    return Path(root or os.environ.get(ENV_CACHE_ROOT, DEFAULT_ROOT))


def params_key(module: str, params: dict) -> str:
    canon = json.dumps(params, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(f"{module}\n{canon}".encode()).hexdigest()[:32]


def _paths(module: str, key: str, ext: str, root) -> tuple[Path, Path]:
    base = cache_root(root) / module
    return base / f"{key}.{ext}", base / f"{key}.sha256"


def cache_put(module: str, params: dict, payload: bytes, *, ext: str = "csv", root=None) -> Path:
    key = params_key(module, params)
    path, digest_path = _paths(module, key, ext, root)
    path.parent.mkdir(parents=True, exist_ok=True)
    lock = path.with_suffix(path.suffix + ".lock")
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        # Another writer owns the entry; content addressing makes the race benign.
        return path
    try:
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_bytes(payload)
        os.replace(tmp, path)
        digest_path.write_text(hashlib.sha256(payload).hexdigest() + "\n", encoding="ascii")
    finally:
        os.close(fd)
        os.unlink(lock)
    return path


def cache_get(module: str, params: dict, *, ext: str = "csv", root=None) -> bytes | None:
    """Payload bytes on a verified hit, None on a miss or digest mismatch."""
    key = params_key(module, params)
    path, digest_path = _paths(module, key, ext, root)
    if not path.exists():
        return None
    payload = path.read_bytes()
    if digest_path.exists():
        recorded = digest_path.read_text(encoding="ascii").strip()
        if hashlib.sha256(payload).hexdigest() != recorded:
            warnings.warn(f"cache digest mismatch for {path}; recomputing", stacklevel=2)
            return None
    return payload
