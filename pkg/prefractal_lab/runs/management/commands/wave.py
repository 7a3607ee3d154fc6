from prefractal_lab.runs.management.base import LabCommand


class Command(LabCommand):
    help = "Run the damped linear wave on mesh.txt and write the norm history to wave.csv"
    stage = "wave"
