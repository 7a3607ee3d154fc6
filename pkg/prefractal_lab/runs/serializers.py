from collections.abc import Mapping

from rest_framework import serializers

from prefractal_lab.geometry.generators import GENERATORS
from prefractal_lab.studies.config import FIELDS
from prefractal_lab.studies.trace import ANCHORS

PIPELINES = ("geometry", "mesh", "eigs", "poisson", "wave", "westervelt", "study")
STUDIES = ("trace", "uniformity", "measure", "poincare", "mosco", "solution")
SECTIONS = ("ifs", "domain", "physics", "discretization", "study", "output")


class StrictSerializer(serializers.Serializer):
    """Serializer that rejects keys it does not declare."""

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["unknown key"] for key in unknown})
        return super().to_internal_value(data)


class IfsSerializer(StrictSerializer):
    generator = serializers.ChoiceField(choices=[*GENERATORS, "explicit"], default="koch")
    params = serializers.DictField(default=dict)
    environment = serializers.JSONField(default=None, allow_null=True)
    maps = serializers.ListField(child=serializers.DictField(), default=list)

    def validate(self, data):
        if data["generator"] == "explicit" and not data["maps"]:
            raise serializers.ValidationError({"maps": "an explicit IFS needs at least one map"})
        return data


class DomainSerializer(StrictSerializer):
    level = serializers.IntegerField(default=0, min_value=0)
    outward = serializers.BooleanField(default=True)
    prefractal = serializers.BooleanField(default=True)


class PhysicsSerializer(StrictSerializer):
    c = serializers.FloatField(default=1.0)
    nu = serializers.FloatField(default=0.5, min_value=0.0)
    alpha = serializers.FloatField(default=0.1, min_value=0.0)
    a = serializers.FloatField(default=1.0, min_value=0.0)
    sigma_scaling = serializers.BooleanField(default=True)
    source = serializers.ChoiceField(choices=sorted(FIELDS), default="bump")
    amplitude = serializers.FloatField(default=0.01, min_value=0.0)

    def validate_c(self, value):
        if value <= 0.0:
            raise serializers.ValidationError("Ensure this value is greater than 0.")
        return value


class DiscretizationSerializer(StrictSerializer):
    h = serializers.FloatField(default=0.1)
    interior_h = serializers.FloatField(default=None, allow_null=True)
    dt = serializers.FloatField(default=0.01)
    T = serializers.FloatField(default=2.0)
    modes = serializers.IntegerField(default=10, min_value=1)

    def _positive(self, value):
        if value is not None and value <= 0.0:
            raise serializers.ValidationError("Ensure this value is greater than 0.")
        return value

    validate_h = validate_interior_h = validate_dt = validate_T = _positive

    def validate(self, data):
        if data["dt"] > data["T"]:
            raise serializers.ValidationError({"dt": "time step must not exceed T"})
        return data


class StudySerializer(StrictSerializer):
    pipeline = serializers.ChoiceField(choices=PIPELINES, default="study")
    studies = serializers.ListField(child=serializers.ChoiceField(choices=STUDIES), default=lambda: ["trace"])
    levels = serializers.ListField(
        child=serializers.IntegerField(min_value=0), default=lambda: [1, 2, 3], min_length=1
    )
    g = serializers.ChoiceField(choices=sorted(FIELDS), default="x")
    anchor = serializers.ChoiceField(choices=ANCHORS, default="midpoint")
    samples = serializers.IntegerField(default=200, min_value=1)
    threshold = serializers.FloatField(default=10.0, min_value=1.0)
    trials = serializers.IntegerField(default=0, min_value=0)
    background = serializers.IntegerField(default=None, allow_null=True, min_value=2)
    refine_only = serializers.BooleanField(default=False)

    def validate_levels(self, value):
        if any(b <= a for a, b in zip(value, value[1:])):
            raise serializers.ValidationError("levels must be strictly increasing")
        return value


class OutputSerializer(StrictSerializer):
    directory = serializers.CharField(default="", allow_blank=True)
    threads = serializers.IntegerField(default=1, min_value=1)
    matrices = serializers.BooleanField(default=False)


class RunConfigSerializer(StrictSerializer):
    """Whole run configuration; a missing section takes all of its defaults."""

    seed = serializers.IntegerField(default=0, min_value=0)
    ifs = IfsSerializer()
    domain = DomainSerializer()
    physics = PhysicsSerializer()
    discretization = DiscretizationSerializer()
    study = StudySerializer()
    output = OutputSerializer()

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            data = {**{section: {} for section in SECTIONS}, **data}
        return super().to_internal_value(data)
