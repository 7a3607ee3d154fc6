from django.apps import AppConfig


class RunsConfig(AppConfig):
    name = "prefractal_lab.runs"
