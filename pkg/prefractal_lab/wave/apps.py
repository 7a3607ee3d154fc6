from django.apps import AppConfig


class WaveConfig(AppConfig):
    name = "prefractal_lab.wave"
