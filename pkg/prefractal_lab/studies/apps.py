from django.apps import AppConfig


class StudiesConfig(AppConfig):
    name = "prefractal_lab.studies"
