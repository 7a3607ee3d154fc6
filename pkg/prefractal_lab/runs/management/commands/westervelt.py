from prefractal_lab.runs.management.base import LabCommand


class Command(LabCommand):
    help = "Solve the Westervelt equation on mesh.txt; writes westervelt.csv and contraction.csv"
    stage = "westervelt"

    def add_stage_arguments(self, parser):
        parser.add_argument("--trials", type=int, help="constant-estimate trials, overrides study.trials")

    def stage_overrides(self, options):
        if options.get("trials") is None:
            return {}
        return {"study": {"trials": options["trials"]}}
