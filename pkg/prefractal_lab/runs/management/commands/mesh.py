from prefractal_lab.runs.management.base import LabCommand


class Command(LabCommand):
    help = "Mesh the square domain bounded by curve.txt and write mesh.txt"
    stage = "mesh"

    def add_stage_arguments(self, parser):
        parser.add_argument("--h", type=float, help="largest edge length, overrides discretization.h")

    def stage_overrides(self, options):
        if options.get("h") is None:
            return {}
        return {"discretization": {"h": options["h"]}}
