from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

from prefractal_lab.exceptions import LabError, SolverError
from prefractal_lab.runs.config import load_config
from prefractal_lab.runs.pipeline import Pipeline

EXIT_INVALID = 2
EXIT_SOLVER = 3


class LabCommand(BaseCommand):
    """
    Shared flags and exit codes of the lab commands.

    Subclasses name the pipeline ``stage`` they run, or override ``execute_stage``.
    """

    stage = None

    def add_arguments(self, parser):
        parser.add_argument("--config", help="JSON run configuration; every key has a default")
        parser.add_argument("--out", help="output directory, overrides output.directory")
        parser.add_argument("--seed", type=int, help="random seed, overrides seed")
        parser.add_argument("--threads", type=int, help="worker count recorded with the run")
        self.add_stage_arguments(parser)

    def add_stage_arguments(self, parser):
        pass

    def stage_overrides(self, options):
        return {}

    def overrides(self, options):
        data = self.stage_overrides(options)
        output = {}
        if options.get("out"):
            output["directory"] = options["out"]
        if options.get("threads") is not None:
            output["threads"] = options["threads"]
        if output:
            data["output"] = output
        if options.get("seed") is not None:
            data["seed"] = options["seed"]
        return data

    def execute_stage(self, config, options):
        return Pipeline(config).execute(self.stage)

    def handle(self, *args, **options):
        try:
            config = load_config(options.get("config"), self.overrides(options))
            paths = self.execute_stage(config, options)
        except serializers.ValidationError as exc:
            lines = exc.detail if isinstance(exc.detail, list) else [exc.detail]
            message = "invalid configuration:\n" + "\n".join(f"  {line}" for line in lines)
            raise CommandError(message, returncode=EXIT_INVALID) from exc
        except SolverError as exc:
            raise CommandError(f"solver failed: {exc}", returncode=EXIT_SOLVER) from exc
        except LabError as exc:
            raise CommandError(str(exc), returncode=EXIT_INVALID) from exc

        for path in paths:
            self.stdout.write(str(path))
        self.stdout.write(self.style.SUCCESS(f"{self.stage or 'run'} finished: {len(paths)} file(s) written"))
