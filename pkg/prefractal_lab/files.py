"""Atomic artifact writes and content digests."""
import hashlib
import os
import tempfile
from pathlib import Path

from prefractal_lab.exceptions import ArtifactError


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` through a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_text(path, expected=None):
    """Text of an upstream artifact; a missing file names what was expected."""
    path = Path(path)
    if not path.is_file():
        what = expected or "artifact"
        raise ArtifactError(f"missing {what}: expected file {path}", path=str(path))
    return path.read_text(encoding="utf-8")


def sha256_digest(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()
