from celery import shared_task

from .config import StudyConfig
from .levels import solve_level


@shared_task
def solve_study_level(study, index, work_dir):
    """
    Solve one level of a solution study and store its samples under ``work_dir``.
    """
    return solve_level(StudyConfig.from_dict(study), index, work_dir)
