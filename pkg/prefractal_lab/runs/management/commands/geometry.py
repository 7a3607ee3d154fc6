from prefractal_lab.runs.management.base import LabCommand


class Command(LabCommand):
    help = "Generate the level-m prefractal curve and write curve.txt"
    stage = "geometry"

    def add_stage_arguments(self, parser):
        parser.add_argument("--level", type=int, help="prefractal level, overrides domain.level")

    def stage_overrides(self, options):
        if options.get("level") is None:
            return {}
        return {"domain": {"level": options["level"]}}
