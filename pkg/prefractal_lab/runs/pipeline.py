"""Stages behind the management commands; each stage reads the files of the one before it."""
import logging
from contextlib import nullcontext
from functools import cached_property
from pathlib import Path

import numpy as np
import pandas as pd

from prefractal_lab.exceptions import ConvergenceError
from prefractal_lab.fem.io import export_system
from prefractal_lab.fem.solvers import solve_eigen, solve_poisson
from prefractal_lab.files import atomic_write
from prefractal_lab.geometry.curves import generate_prefractal
from prefractal_lab.geometry.ifs import sigma
from prefractal_lab.geometry.io import read_curve, write_curve
from prefractal_lab.meshing.domains import UNIT_SQUARE, BoundarySpec, build_domain, square_domain
from prefractal_lab.meshing.io import read_mesh, write_mesh
from prefractal_lab.meshing.mesher import triangulate
from prefractal_lab.studies.config import field_by_name
from prefractal_lab.studies.mosco import mosco_study
from prefractal_lab.studies.solution import solution_convergence_study
from prefractal_lab.studies.trace import trace_convergence_study
from prefractal_lab.studies.uniformity import (
    measure_uniformity_study,
    poincare_uniformity_study,
    uniform_trace_ratio,
)
from prefractal_lab.wave.io import format_csv, write_trajectory_csv
from prefractal_lab.wave.newmark import implicit_time_integrate
from prefractal_lab.wave.params import WaveParams
from prefractal_lab.westervelt.constants import estimate_constants
from prefractal_lab.westervelt.io import write_report
from prefractal_lab.westervelt.params import WesterveltParams
from prefractal_lab.westervelt.picard import picard_solve

from .config import build_ifs, output_directory, study_config
from .manifest import RunManifest

logger = logging.getLogger(__name__)

CURVE_FILE = "curve.txt"
MESH_FILE = "mesh.txt"
EIGEN_FILE = "eigenvalues.csv"
POISSON_FILE = "poisson.csv"
WAVE_FILE = "wave.csv"
WESTERVELT_FILE = "westervelt.csv"
CONTRACTION_FILE = "contraction.csv"
STUDY_DIR = "study"

STAGE_CHAINS = {
    "geometry": ("geometry",),
    "mesh": ("geometry", "mesh"),
    "eigs": ("geometry", "mesh", "eigs"),
    "poisson": ("geometry", "mesh", "poisson"),
    "wave": ("geometry", "mesh", "wave"),
    "westervelt": ("geometry", "mesh", "westervelt"),
    "study": ("study",),
}


class Pipeline:
    """Stages of one validated run configuration writing into ``directory``."""

    def __init__(self, config, directory=None, manifest=None):
        self.config = config
        self.directory = Path(directory or output_directory(config))
        self.manifest = manifest

    def path(self, name):
        return self.directory / name

    def _record(self, paths):
        paths = [Path(p) for p in paths]
        if self.manifest is not None:
            self.manifest.add(*paths)
        for path in paths:
            logger.info("wrote %s", path)
        return paths

    @cached_property
    def ifs(self):
        return build_ifs(self.config)

    @property
    def level(self):
        return self.config["domain"]["level"]

    @property
    def has_curve(self):
        return self.config["domain"]["prefractal"]

    @property
    def sigma_weight(self):
        if self.has_curve and self.config["physics"]["sigma_scaling"]:
            return sigma(self.ifs, self.level)
        return 1.0

    @property
    def wave_params(self):
        physics, grid = self.config["physics"], self.config["discretization"]
        return WaveParams(c=physics["c"], nu=physics["nu"], T=grid["T"], dt=grid["dt"])

    @property
    def westervelt_params(self):
        physics = self.config["physics"]
        return WesterveltParams(
            wave=self.wave_params, alpha=physics["alpha"], a=physics["a"], sigma_weight=self.sigma_weight
        )

    def execute(self, stage, **options):
        timer = self.manifest.timed(stage) if self.manifest is not None else nullcontext()
        with timer:
            return getattr(self, stage)(**options)

    def geometry(self):
        curve = generate_prefractal(self.ifs, self.level)
        return self._record([write_curve(curve, self.path(CURVE_FILE))])

    def mesh(self):
        grid = self.config["discretization"]
        h = grid["h"]
        if self.has_curve:
            curve = read_curve(self.path(CURVE_FILE))
            spec = BoundarySpec.square(outward=self.config["domain"]["outward"])
            domain = build_domain(UNIT_SQUARE, spec, self.ifs, self.level, curve=curve)
            h = min(h, float(curve.segment_lengths.min()))
        else:
            domain = square_domain()
        interior = None if grid["interior_h"] is None else max(grid["interior_h"], h)
        mesh = triangulate(domain, h, interior_h=interior)
        return self._record([write_mesh(mesh, self.path(MESH_FILE))])

    def system(self):
        system = self.westervelt_params.system(read_mesh(self.path(MESH_FILE)))
        if self.config["output"]["matrices"]:
            self._record(export_system(system, self.directory))
        return system

    def initial_displacement(self, system):
        physics = self.config["physics"]
        return physics["amplitude"] * solve_poisson(system, field_by_name(physics["source"])).values

    def eigs(self):
        basis = solve_eigen(self.system(), self.config["discretization"]["modes"])
        frame = pd.DataFrame({"k": np.arange(1, basis.count + 1), "eigenvalue": basis.eigenvalues})
        return self._record([atomic_write(self.path(EIGEN_FILE), format_csv(frame))])

    def poisson(self):
        system = self.system()
        u = solve_poisson(system, field_by_name(self.config["physics"]["source"]))
        nodes = system.mesh.nodes
        frame = pd.DataFrame({"node": np.arange(nodes.shape[0]), "x": nodes[:, 0], "y": nodes[:, 1], "u": u.values})
        return self._record([atomic_write(self.path(POISSON_FILE), format_csv(frame))])

    def wave(self):
        system = self.system()
        traj = implicit_time_integrate(system, self.wave_params, u0=self.initial_displacement(system))
        return self._record([write_trajectory_csv(traj, self.wave_params, self.path(WAVE_FILE))])

    def westervelt(self):
        """Picard solve; a failed iteration still leaves its contraction report on disk."""
        system, params = self.system(), self.westervelt_params
        trials = self.config["study"]["trials"]
        constants = estimate_constants(system, params, trials, self.config["seed"]) if trials else None
        try:
            traj, report = picard_solve(system, params, u0=self.initial_displacement(system), constants=constants)
        except ConvergenceError as exc:
            if exc.report is not None:
                self._record([write_report(exc.report, self.path(CONTRACTION_FILE))])
            raise
        return self._record(
            [
                write_trajectory_csv(traj, params.wave, self.path(WESTERVELT_FILE)),
                write_report(report, self.path(CONTRACTION_FILE)),
            ]
        )

    def study(self, names=None):
        study = study_config(self.config)
        section = self.config["study"]
        directory = self.path(STUDY_DIR)
        paths = []
        for name in names or section["studies"]:
            if name == "trace":
                report = trace_convergence_study(
                    study.system_ifs,
                    field_by_name(section["g"]),
                    study.levels,
                    anchor=section["anchor"],
                    name=section["g"],
                )
            elif name == "uniformity":
                report = uniform_trace_ratio(study, field_by_name(section["g"]), section["g"])
            elif name == "measure":
                report = measure_uniformity_study(study)
            elif name == "poincare":
                report = poincare_uniformity_study(study)
            elif name == "mosco":
                report = mosco_study(study)
            else:
                work_dir = directory / "levels"
                report = solution_convergence_study(study, work_dir=work_dir)
                paths += self._record(sorted(work_dir.glob("level_*.csv")))
            paths += self._record(report.write(directory, stem=name))
        return paths


def run(config, directory=None):
    """Execute the configured pipeline and write its manifest, also when a stage fails."""
    directory = Path(directory or output_directory(config))
    directory.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.for_config(config, directory)
    pipeline = Pipeline(config, directory, manifest)
    try:
        for stage in STAGE_CHAINS[config["study"]["pipeline"]]:
            if stage == "geometry" and not pipeline.has_curve:
                continue
            pipeline.execute(stage)
    finally:
        manifest.write()
    return manifest
