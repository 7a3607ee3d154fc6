from django.apps import AppConfig


class FemConfig(AppConfig):
    name = "prefractal_lab.fem"
