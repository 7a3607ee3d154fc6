"""CSV export of trajectory norm histories."""
import pandas as pd

from prefractal_lab.files import atomic_write

from .diagnostics import energy_history

FLOAT_FORMAT = "%.17g"
TRAJECTORY_COLUMNS = ("t", "l2_u", "v_norm_u", "l2_v", "energy_total", "laplacian_l2_u")


def trajectory_frame(traj, params):
    return pd.DataFrame(
        {
            "t": traj.times,
            "l2_u": traj.l2_u,
            "v_norm_u": traj.v_norm_u,
            "l2_v": traj.l2_v,
            "energy_total": energy_history(traj, params),
            "laplacian_l2_u": traj.laplacian_u,
        },
        columns=list(TRAJECTORY_COLUMNS),
    )


def format_csv(frame):
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_trajectory_csv(traj, params, path):
    return atomic_write(path, format_csv(trajectory_frame(traj, params)))
