"""Run configuration: loading, validation, canonical text and hash."""
import hashlib
import json

from django.conf import settings
from rest_framework import serializers
from rest_framework.settings import api_settings

from prefractal_lab.exceptions import GeometryError
from prefractal_lab.files import read_text
from prefractal_lab.geometry.generators import ifs_from_spec
from prefractal_lab.studies.config import StudyConfig
from prefractal_lab.studies.trace import ORACLE_DEPTH

from .serializers import RunConfigSerializer


def flatten_errors(detail, prefix=""):
    """``section.key: message`` lines of a nested serializer error."""
    if isinstance(detail, dict):
        lines = []
        for key, value in detail.items():
            name = "" if key == api_settings.NON_FIELD_ERRORS_KEY else str(key)
            lines += flatten_errors(value, ".".join(part for part in (prefix, name) if part))
        return lines
    if isinstance(detail, list):
        lines = []
        for index, item in enumerate(detail):
            if isinstance(item, (dict, list)):
                lines += flatten_errors(item, f"{prefix}.{index}" if prefix else str(index))
            else:
                lines.append(f"{prefix or 'config'}: {item}")
        return lines
    return [f"{prefix or 'config'}: {detail}"]


def canonical_json(config):
    return json.dumps(config, sort_keys=True, indent=2) + "\n"


def config_hash(config):
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def ifs_levels(config):
    """Environment positions a run can reach, oracle depth included."""
    return max(config["domain"]["level"], *config["study"]["levels"]) + ORACLE_DEPTH


def build_ifs(config):
    return ifs_from_spec(config["ifs"], levels=ifs_levels(config))


def validate_config(data):
    """Validated configuration with every default filled in, as plain JSON types.

    Raises :class:`rest_framework.serializers.ValidationError` whose detail
    is the list of flattened ``section.key: message`` lines.
    """
    serializer = RunConfigSerializer(data=data)
    if not serializer.is_valid():
        raise serializers.ValidationError(flatten_errors(serializer.errors))
    config = json.loads(json.dumps(serializer.validated_data))
    try:
        build_ifs(config)
    except (GeometryError, TypeError, ValueError) as exc:
        raise serializers.ValidationError([f"ifs: {exc}"]) from exc
    return config


def parse_json(text, source="config"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise serializers.ValidationError([f"{source}: line {exc.lineno}: {exc.msg}"]) from exc


def merge_overrides(data, overrides):
    """``data`` with each override section merged key by key over its file section."""
    merged = dict(data)
    for key, value in overrides.items():
        current = merged.get(key)
        if isinstance(value, dict) and isinstance(current, dict):
            merged[key] = {**current, **value}
        else:
            merged[key] = value
    return merged


def load_config(path=None, overrides=None):
    """Validated configuration from a JSON file (or all defaults) plus command-line overrides."""
    data = parse_json(read_text(path, "run configuration"), source=str(path)) if path else {}
    if not isinstance(data, dict):
        raise serializers.ValidationError([f"{path}: the configuration must be a JSON object"])
    return validate_config(merge_overrides(data, overrides or {}))


def output_directory(config):
    return config["output"]["directory"] or settings.LAB_OUTPUT_DIR


def study_config(config):
    """Study settings of a validated run configuration."""
    physics, grid, study = config["physics"], config["discretization"], config["study"]
    return StudyConfig(
        ifs=config["ifs"],
        levels=tuple(study["levels"]),
        h=grid["h"],
        interior_h=grid["interior_h"],
        outward=config["domain"]["outward"],
        c=physics["c"],
        nu=physics["nu"],
        T=grid["T"],
        dt=grid["dt"],
        alpha=physics["alpha"],
        a=physics["a"],
        sigma_scaling=physics["sigma_scaling"],
        source=physics["source"],
        amplitude=physics["amplitude"],
        background=study["background"],
        refine_only=study["refine_only"],
        samples=study["samples"],
        seed=config["seed"],
        threshold=study["threshold"],
    )
