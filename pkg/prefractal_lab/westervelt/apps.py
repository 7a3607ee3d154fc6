from django.apps import AppConfig


class WesterveltConfig(AppConfig):
    name = "prefractal_lab.westervelt"
