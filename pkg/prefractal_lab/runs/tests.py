import json
import tempfile
from io import StringIO
from pathlib import Path

import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings
from rest_framework import serializers

from prefractal_lab.exceptions import ParameterError
from prefractal_lab.files import sha256_digest

from .config import canonical_json, config_hash, flatten_errors, load_config, study_config, validate_config
from .manifest import MANIFEST_NAME, RunManifest

SQUARE = {"domain": {"prefractal": False}, "discretization": {"h": 0.25}}


def errors_of(data):
    try:
        validate_config(data)
    except serializers.ValidationError as exc:
        return [str(line) for line in exc.detail]
    return []


class RunConfigTests(SimpleTestCase):
    def test_defaults_are_filled(self):
        config = validate_config({})
        self.assertEqual(config["seed"], 0)
        self.assertEqual(config["ifs"]["generator"], "koch")
        self.assertEqual(config["study"]["levels"], [1, 2, 3])
        self.assertIsNone(config["discretization"]["interior_h"])

    def test_round_trip_is_byte_identical(self):
        config = validate_config({"physics": {"c": 2}, "study": {"levels": [0, 2, 4]}})
        text = canonical_json(config)
        self.assertTrue(text.endswith("}\n"))
        self.assertEqual(canonical_json(validate_config(json.loads(text))), text)
        self.assertEqual(config_hash(config), config_hash(json.loads(text)))

    def test_errors_name_key_and_constraint(self):
        self.assertEqual(errors_of({"physics": {"c": 0}}), ["physics.c: Ensure this value is greater than 0."])
        self.assertEqual(
            errors_of({"study": {"levels": [2, 1]}}), ["study.levels: levels must be strictly increasing"]
        )
        self.assertEqual(errors_of({"physics": {"speed": 1}}), ["physics.speed: unknown key"])
        self.assertEqual(
            errors_of({"ifs": {"generator": "explicit"}}), ["ifs.maps: an explicit IFS needs at least one map"]
        )
        self.assertIn("physics.nu: Ensure this value is greater than or equal to 0.0.", errors_of({"physics": {"nu": -1}}))

    def test_invalid_ifs_is_reported(self):
        errors = errors_of({"ifs": {"generator": "koch", "params": {"l": 1.5}}})
        self.assertEqual(len(errors), 1)
        self.assertTrue(errors[0].startswith("ifs: "))

    def test_flatten_nested_lists(self):
        detail = {"study": {"studies": {1: ["bad choice"]}}, "non_field_errors": ["whole config"]}
        self.assertEqual(flatten_errors(detail), ["study.studies.1: bad choice", "config: whole config"])

    def test_load_with_overrides(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "run.json"
            path.write_text(json.dumps({"seed": 3, "domain": {"level": 2, "outward": False}}))
            config = load_config(path, {"domain": {"level": 4}})
        self.assertEqual(config["seed"], 3)
        self.assertEqual(config["domain"], {"level": 4, "outward": False, "prefractal": True})

    def test_malformed_json(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "run.json"
            path.write_text("{\"seed\": ")
            with self.assertRaises(serializers.ValidationError):
                load_config(path)

    def test_study_config(self):
        config = validate_config({"physics": {"alpha": 0.0}, "study": {"levels": [0, 1]}, "seed": 5})
        study = study_config(config)
        self.assertEqual(study.levels, (0, 1))
        self.assertEqual(study.seed, 5)
        self.assertEqual(study.alpha, 0.0)

    def test_study_config_rejects_bad_wave(self):
        config = validate_config({"discretization": {"T": 1.0, "dt": 0.3}})
        with self.assertRaises(ParameterError):
            study_config(config).wave


class ManifestTests(SimpleTestCase):
    def test_artifacts_and_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            manifest = RunManifest.for_config(validate_config({}), tmp)
            path = Path(tmp) / "sub" / "table.csv"
            path.parent.mkdir()
            path.write_text("a,b\n1,2\n")
            manifest.add(path)
            with self.assertRaises(ParameterError):
                with manifest.timed("wave"):
                    raise ParameterError("dt too large")
            data = json.loads(manifest.write().read_text())
        self.assertEqual(data["artifacts"][0]["path"], "sub/table.csv")
        self.assertEqual(data["artifacts"][0]["bytes"], 8)
        self.assertEqual(data["errors"], [{"stage": "wave", "type": "ParameterError", "message": "dt too large"}])
        self.assertFalse(data["ok"])
        self.assertIn("wave", data["timings"])
        self.assertIn("LAB_PICARD_TOL", data["defaults"]["settings"])
        self.assertEqual(data["defaults"]["config"]["seed"], 0)


class CommandTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def config_file(self, data):
        path = self.out / "config.json"
        path.write_text(json.dumps(data))
        return str(path)

    def call(self, name, *args, **options):
        stdout = StringIO()
        call_command(name, *args, out=str(self.out), stdout=stdout, **options)
        return stdout.getvalue()

    def test_geometry_koch_level_three(self):
        self.call("geometry", level=3)
        lines = (self.out / "curve.txt").read_text().splitlines()
        self.assertTrue(lines[0].startswith("# ifs-curve level=3"))
        self.assertEqual(len(lines) - 1, 64)

    def test_mesh_needs_the_curve_file(self):
        with self.assertRaises(CommandError) as caught:
            self.call("mesh")
        self.assertEqual(caught.exception.returncode, 2)
        self.assertIn("curve.txt", str(caught.exception))

    def test_stages_chain_through_files(self):
        self.call("geometry", level=1)
        self.call("mesh", h=0.2)
        self.call("poisson")
        frame = pd.read_csv(self.out / "poisson.csv")
        self.assertEqual(list(frame.columns), ["node", "x", "y", "u"])
        self.assertGreater(frame["u"].abs().max(), 0.0)

    def test_eigs_on_square(self):
        config = self.config_file(SQUARE)
        self.call("mesh", config=config)
        self.call("eigs", config=config, k=3)
        frame = pd.read_csv(self.out / "eigenvalues.csv")
        self.assertEqual(list(frame["k"]), [1, 2, 3])
        self.assertTrue(frame["eigenvalue"].is_monotonic_increasing)

    def test_matrix_export(self):
        config = self.config_file({**SQUARE, "output": {"matrices": True}})
        self.call("mesh", config=config)
        output = self.call("poisson", config=config)
        for name in ("M", "A", "R", "S"):
            self.assertIn(f"{name}.coo", output)
        row, col, value = (self.out / "M.coo").read_text().splitlines()[0].split()
        self.assertEqual((int(row), int(col)), (0, 0))
        self.assertGreater(float(value), 0.0)

    def test_wave_history(self):
        config = self.config_file({**SQUARE, "discretization": {"h": 0.25, "T": 0.2, "dt": 0.05}})
        self.call("mesh", config=config)
        self.call("wave", config=config)
        frame = pd.read_csv(self.out / "wave.csv")
        self.assertEqual(len(frame), 5)

    def test_study_trace(self):
        output = self.call("study", "trace", g="x", levels=[1, 2, 3])
        self.assertIn("study: trace", output)
        frame = pd.read_csv(self.out / "study" / "trace.csv")
        self.assertEqual(list(frame["level"]), [1, 2, 3])
        self.assertTrue((self.out / "study" / "trace.svg").is_file())

    def test_invalid_configuration_exit_code(self):
        config = self.config_file({"physics": {"c": -1.0}})
        with self.assertRaises(CommandError) as caught:
            self.call("poisson", config=config)
        self.assertEqual(caught.exception.returncode, 2)
        self.assertIn("physics.c", str(caught.exception))

    def test_unknown_study_is_a_validation_error(self):
        with self.assertRaises(CommandError) as caught:
            self.call("study", "spectra")
        self.assertEqual(caught.exception.returncode, 2)

    @override_settings(LAB_PICARD_MAXITER=1)
    def test_solver_failure_exit_code(self):
        config = self.config_file({**SQUARE, "discretization": {"h": 0.25, "T": 0.2, "dt": 0.05}})
        self.call("mesh", config=config)
        with self.assertRaises(CommandError) as caught:
            self.call("westervelt", config=config)
        self.assertEqual(caught.exception.returncode, 3)
        self.assertTrue((self.out / "contraction.csv").is_file())


class RunTests(SimpleTestCase):
    def run_config(self, data, directory):
        path = Path(directory) / "config.json"
        path.write_text(json.dumps(data))
        call_command("run", config=str(path), out=str(Path(directory) / "out"), stdout=StringIO())
        return json.loads((Path(directory) / "out" / MANIFEST_NAME).read_text())

    def test_minimal_poisson_run(self):
        data = {**SQUARE, "study": {"pipeline": "poisson"}}
        with tempfile.TemporaryDirectory() as first, tempfile.TemporaryDirectory() as second:
            manifest = self.run_config(data, first)
            again = self.run_config(data, second)
            self.assertEqual([a["path"] for a in manifest["artifacts"]], ["mesh.txt", "poisson.csv"])
            self.assertEqual(manifest["artifacts"][1]["sha256"], sha256_digest(Path(first) / "out" / "poisson.csv"))
        self.assertTrue(manifest["ok"])
        self.assertEqual(manifest["artifacts"], again["artifacts"])
        self.assertEqual(manifest["config_hash"], again["config_hash"])

    def test_koch_westervelt_study(self):
        data = {
            "discretization": {"h": 0.1, "interior_h": 0.1, "T": 0.5, "dt": 0.05},
            "study": {"pipeline": "study", "studies": ["solution"], "levels": [1, 2, 3], "background": 32},
        }
        with tempfile.TemporaryDirectory() as tmp:
            manifest = self.run_config(data, tmp)
        paths = [a["path"] for a in manifest["artifacts"]]
        for index in range(3):
            self.assertIn(f"study/levels/level_{index:02d}.csv", paths)
        for suffix in ("csv", "txt", "svg"):
            self.assertIn(f"study/solution.{suffix}", paths)

    @override_settings(LAB_PICARD_MAXITER=1)
    def test_failed_run_keeps_manifest(self):
        data = {**SQUARE, "discretization": {"h": 0.25, "T": 0.2, "dt": 0.05}, "study": {"pipeline": "westervelt"}}
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(CommandError) as caught:
                self.run_config(data, tmp)
            manifest = json.loads((Path(tmp) / "out" / MANIFEST_NAME).read_text())
        self.assertEqual(caught.exception.returncode, 3)
        self.assertFalse(manifest["ok"])
        self.assertEqual(manifest["errors"][0]["stage"], "westervelt")
        self.assertIn("contraction.csv", [a["path"] for a in manifest["artifacts"]])
