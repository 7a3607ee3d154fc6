from prefractal_lab.runs.management.base import LabCommand


class Command(LabCommand):
    help = "Solve the Poisson problem of physics.source on mesh.txt and write poisson.csv"
    stage = "poisson"
