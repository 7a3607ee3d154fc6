from pathlib import Path
import os
from environ import Env

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Loading environment variables
env = Env()
env.read_env(os.path.join(BASE_DIR, ".env"))

# SECURITY WARNING: the lab serves no requests, the key only satisfies Django.
SECRET_KEY = env("DJANGO_SECRET_KEY", default="prefractal-lab-local-key")

DEBUG = env.bool("DJANGO_DEBUG", default=False)

ALLOWED_HOSTS = []


# Application definition

DJANGO_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
]

THIRD_PARTY_APPS = [
    "rest_framework",
]

LOCAL_APPS = [
    "prefractal_lab.geometry.apps.GeometryConfig",
    "prefractal_lab.meshing.apps.MeshingConfig",
    "prefractal_lab.fem.apps.FemConfig",
    "prefractal_lab.wave.apps.WaveConfig",
    "prefractal_lab.westervelt.apps.WesterveltConfig",
    "prefractal_lab.studies.apps.StudiesConfig",
    "prefractal_lab.runs.apps.RunsConfig",
]

INSTALLED_APPS = DJANGO_APPS + THIRD_PARTY_APPS + LOCAL_APPS

# No result database: every artifact is a file listed in the run manifest.
DATABASES = {}

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# Internationalization
LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True


# Logging
LAB_LOG_LEVEL = env("LAB_LOG_LEVEL", default="INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "lab": {
            "format": "{asctime} {levelname} {name} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "lab",
        },
    },
    "loggers": {
        "prefractal_lab": {
            "handlers": ["console"],
            "level": LAB_LOG_LEVEL,
            "propagate": False,
        },
    },
}


# Lab numerics
LAB_MAX_SEGMENTS = env.int("LAB_MAX_SEGMENTS", default=4**10)
LAB_MIN_ANGLE = env.float("LAB_MIN_ANGLE", default=20.0)
LAB_BACKGROUND_RESOLUTION = env.int("LAB_BACKGROUND_RESOLUTION", default=256)
LAB_SOLVER_RTOL = env.float("LAB_SOLVER_RTOL", default=1e-10)
LAB_EIGEN_MAXITER = env.int("LAB_EIGEN_MAXITER", default=10000)
LAB_NEWTON_TOL = env.float("LAB_NEWTON_TOL", default=1e-10)
LAB_NEWTON_MAXITER = env.int("LAB_NEWTON_MAXITER", default=25)
LAB_PICARD_TOL = env.float("LAB_PICARD_TOL", default=1e-10)
LAB_PICARD_MAXITER = env.int("LAB_PICARD_MAXITER", default=50)
LAB_DEGENERACY_FLOOR = env.float("LAB_DEGENERACY_FLOOR", default=0.1)
LAB_OUTPUT_DIR = env("LAB_OUTPUT_DIR", default=str(BASE_DIR / "runs"))

LAB_SETTING_NAMES = [
    "LAB_MAX_SEGMENTS",
    "LAB_MIN_ANGLE",
    "LAB_BACKGROUND_RESOLUTION",
    "LAB_SOLVER_RTOL",
    "LAB_EIGEN_MAXITER",
    "LAB_NEWTON_TOL",
    "LAB_NEWTON_MAXITER",
    "LAB_PICARD_TOL",
    "LAB_PICARD_MAXITER",
    "LAB_DEGENERACY_FLOOR",
]


# Celery Configuration
# Level solves run in-process unless a broker is configured.
CELERY_BROKER_URL = env("CELERY_BROKER_URL", default="memory://")
CELERY_RESULT_BACKEND = env("CELERY_RESULT_BACKEND", default="cache+memory://")
CELERY_TASK_ALWAYS_EAGER = env.bool("CELERY_TASK_ALWAYS_EAGER", default=True)
CELERY_TASK_EAGER_PROPAGATES = True
CELERY_ACCEPT_CONTENT = ["application/json"]
CELERY_TASK_SERIALIZER = "json"
CELERY_RESULT_SERIALIZER = "json"
CELERY_TIMEZONE = TIME_ZONE
