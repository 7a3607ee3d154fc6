import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "prefractal_lab.settings")
django.setup()
