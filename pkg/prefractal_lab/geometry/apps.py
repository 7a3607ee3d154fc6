from django.apps import AppConfig


class GeometryConfig(AppConfig):
    name = "prefractal_lab.geometry"
