from prefractal_lab.runs.management.base import LabCommand


class Command(LabCommand):
    help = "Smallest eigenvalues of the V-form on mesh.txt, written to eigenvalues.csv"
    stage = "eigs"

    def add_stage_arguments(self, parser):
        parser.add_argument("--k", type=int, help="number of eigenvalues, overrides discretization.modes")

    def stage_overrides(self, options):
        if options.get("k") is None:
            return {}
        return {"discretization": {"modes": options["k"]}}
