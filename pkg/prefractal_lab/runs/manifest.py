"""Run manifest: what was configured, what was written, how long each stage took."""
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

from django.conf import settings

import prefractal_lab
from prefractal_lab.files import atomic_write, sha256_digest

from .config import config_hash

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def lab_settings():
    return {name: getattr(settings, name) for name in settings.LAB_SETTING_NAMES}


@dataclass
class RunManifest:
    """Every output file is listed relative to ``directory`` with its SHA-256 digest."""

    config_hash: str
    directory: str
    version: str = prefractal_lab.__version__
    defaults: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)

    @classmethod
    def for_config(cls, config, directory):
        return cls(
            config_hash=config_hash(config),
            directory=str(directory),
            defaults={"config": config, "settings": lab_settings()},
        )

    def add(self, *paths):
        for path in paths:
            path = Path(path).resolve()
            entry = {
                "path": path.relative_to(Path(self.directory).resolve()).as_posix(),
                "sha256": sha256_digest(path),
                "bytes": path.stat().st_size,
            }
            self.artifacts = [a for a in self.artifacts if a["path"] != entry["path"]] + [entry]

    def digest(self, relative):
        for artifact in self.artifacts:
            if artifact["path"] == relative:
                return artifact["sha256"]
        return None

    @contextmanager
    def timed(self, stage):
        """Record the wall-clock seconds of ``stage``; a failure is recorded and re-raised."""
        start = time.perf_counter()
        try:
            yield
        except Exception as exc:
            self.errors.append({"stage": stage, "type": type(exc).__name__, "message": str(exc)})
            raise
        finally:
            self.timings[stage] = round(time.perf_counter() - start, 6)
            logger.debug("stage %s took %.3f s", stage, self.timings[stage])

    @property
    def ok(self):
        return not self.errors

    def as_dict(self):
        data = asdict(self)
        data["artifacts"] = sorted(self.artifacts, key=lambda a: a["path"])
        data["ok"] = self.ok
        return data

    def write(self):
        path = atomic_write(Path(self.directory) / MANIFEST_NAME, json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n")
        logger.info("manifest written to %s (%d artifacts)", path, len(self.artifacts))
        return path
