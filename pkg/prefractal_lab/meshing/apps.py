from django.apps import AppConfig


class MeshingConfig(AppConfig):
    name = "prefractal_lab.meshing"
