from pathlib import Path

from prefractal_lab.runs.config import output_directory
from prefractal_lab.runs.management.base import LabCommand
from prefractal_lab.runs.manifest import MANIFEST_NAME
from prefractal_lab.runs.pipeline import run


class Command(LabCommand):
    help = "Run the pipeline selected by study.pipeline and write manifest.json"

    def execute_stage(self, config, options):
        manifest = run(config)
        for artifact in manifest.artifacts:
            self.stdout.write(f"{artifact['sha256'][:12]}  {artifact['path']}")
        return [Path(output_directory(config)) / MANIFEST_NAME]
