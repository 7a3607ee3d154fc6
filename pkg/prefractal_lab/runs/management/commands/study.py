from prefractal_lab.runs.management.base import LabCommand
from prefractal_lab.runs.pipeline import Pipeline
from prefractal_lab.runs.serializers import STUDIES


class Command(LabCommand):
    help = "Run convergence studies; each writes <name>.csv, <name>.txt and <name>.svg under study/"
    stage = "study"

    def add_stage_arguments(self, parser):
        parser.add_argument("names", nargs="*", help=f"studies to run ({', '.join(STUDIES)}), default study.studies")
        parser.add_argument("--levels", type=int, nargs="+", help="levels, overrides study.levels")
        parser.add_argument("--g", help="field name for the trace studies, overrides study.g")

    def stage_overrides(self, options):
        study = {}
        if options.get("levels"):
            study["levels"] = options["levels"]
        if options.get("g"):
            study["g"] = options["g"]
        if options.get("names"):
            study["studies"] = options["names"]
        return {"study": study} if study else {}

    def execute_stage(self, config, options):
        paths = Pipeline(config).execute("study")
        for path in paths:
            if path.suffix == ".txt":
                self.stdout.write(path.read_text(encoding="utf-8"))
        return paths
