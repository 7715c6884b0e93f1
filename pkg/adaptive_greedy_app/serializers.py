import logging
from fractions import Fraction

from rest_framework import serializers

from .instances import SmallInstanceCaps

logger = logging.getLogger("adaptive_greedy_app.serializers")

OBJECTIVE_KINDS = ["count", "and", "coverage", "modular", "matchmaking"]
CONSTRAINT_KINDS = ["uniform", "partition", "intersection"]
GENERATOR_KINDS = ["random_small"]


class FractionField(serializers.Field):
    """A positive rational given as a JSON number or a string such as "3/2"."""

    default_error_messages = {
        "invalid": "A positive rational number is required.",
    }

    def to_internal_value(self, data):
        if isinstance(data, bool) or not isinstance(data, (int, float, str)):
            self.fail("invalid")
        try:
            value = Fraction(str(data))
        except (ValueError, ZeroDivisionError):
            self.fail("invalid")
        if value <= 0:
            self.fail("invalid")
        return value

    def to_representation(self, value):
        value = Fraction(value)
        return value.numerator if value.denominator == 1 else str(value)


class OutcomeChoiceField(serializers.Field):
    """One outcome label for every item, or a list with one label per item."""

    default_error_messages = {
        "invalid": "Expected an outcome label or a list of outcome labels.",
    }

    def to_internal_value(self, data):
        if isinstance(data, str):
            return data
        if isinstance(data, list) and all(isinstance(label, str) for label in data):
            return list(data)
        self.fail("invalid")

    def to_representation(self, value):
        return value


class SuccessProbabilityField(serializers.Field):
    """A probability shared by every pair, or a list of {left, right, p} entries."""

    default_error_messages = {
        "invalid": "Expected a probability or a list of {left, right, p} objects.",
        "range": "Probability {p} is outside [0, 1].",
    }

    def to_internal_value(self, data):
        if isinstance(data, bool):
            self.fail("invalid")
        if isinstance(data, (int, float)):
            if not 0.0 <= float(data) <= 1.0:
                self.fail("range", p=data)
            return float(data)
        if not isinstance(data, list):
            self.fail("invalid")

        table = {}
        for entry in data:
            if not isinstance(entry, dict) or set(entry) != {"left", "right", "p"}:
                self.fail("invalid")
            left, right, p = entry["left"], entry["right"], entry["p"]
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in (left, right)):
                self.fail("invalid")
            if isinstance(p, bool) or not isinstance(p, (int, float)):
                self.fail("invalid")
            if not 0.0 <= float(p) <= 1.0:
                self.fail("range", p=p)
            table[(left, right)] = float(p)
        return table

    def to_representation(self, value):
        return value


class ItemSerializer(serializers.Serializer):
    label = serializers.CharField()
    outcomes = serializers.ListField(child=serializers.CharField())
    probabilities = serializers.ListField(child=serializers.FloatField())


class MatchmakingSpecSerializer(serializers.Serializer):
    left_count = serializers.IntegerField(min_value=1)
    right_count = serializers.IntegerField(min_value=1)
    cap_left = serializers.IntegerField(min_value=1, default=1)
    cap_right = serializers.IntegerField(min_value=1, default=1)
    success_prob = SuccessProbabilityField()


class ObjectiveSerializer(serializers.Serializer):
    kind = serializers.CharField()
    success_outcome = OutcomeChoiceField(required=False)
    items = serializers.ListField(child=serializers.CharField(), required=False)
    universe_size = serializers.IntegerField(min_value=1, required=False)
    sets = serializers.DictField(
        child=serializers.ListField(child=serializers.IntegerField(min_value=0)), required=False
    )
    weights = serializers.ListField(child=serializers.FloatField(min_value=0), required=False)
    working_outcome = OutcomeChoiceField(required=False)
    values = serializers.DictField(
        child=serializers.ListField(child=serializers.FloatField()), required=False
    )
    spec = MatchmakingSpecSerializer(required=False)

    REQUIRED_BY_KIND = {
        "count": [],
        "and": ["items"],
        "coverage": ["universe_size", "sets"],
        "modular": ["values"],
        "matchmaking": ["spec"],
    }

    def validate_kind(self, value):
        if value not in OBJECTIVE_KINDS:
            raise serializers.ValidationError(
                f"unknown objective kind '{value}'", code="unknown_kind"
            )
        return value

    def validate(self, attrs):
        missing = [name for name in self.REQUIRED_BY_KIND[attrs["kind"]] if name not in attrs]
        if missing:
            raise serializers.ValidationError(
                {name: f"required for objective kind '{attrs['kind']}'" for name in missing}
            )
        return attrs


class ConstraintSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=CONSTRAINT_KINDS)
    k = serializers.IntegerField(min_value=0, required=False)
    blocks = serializers.ListField(
        child=serializers.ListField(child=serializers.CharField()), required=False
    )
    capacities = serializers.ListField(
        child=serializers.IntegerField(min_value=0), required=False
    )
    members = serializers.ListField(child=serializers.DictField(), required=False)

    def validate_members(self, value):
        validated = []
        errors = {}
        for position, member in enumerate(value):
            serializer = ConstraintSerializer(data=member)
            if serializer.is_valid():
                validated.append(serializer.validated_data)
            else:
                errors[str(position)] = serializer.errors
        if errors:
            raise serializers.ValidationError(errors)
        return validated

    def validate(self, attrs):
        kind = attrs["kind"]
        if kind == "uniform" and "k" not in attrs:
            raise serializers.ValidationError({"k": "required for a uniform constraint"})
        if kind == "partition":
            if "blocks" not in attrs or "capacities" not in attrs:
                raise serializers.ValidationError(
                    "a partition constraint needs blocks and capacities"
                )
            if len(attrs["blocks"]) != len(attrs["capacities"]):
                raise serializers.ValidationError(
                    {"capacities": "needs one capacity per block"}
                )
        if kind == "intersection" and not attrs.get("members"):
            raise serializers.ValidationError({"members": "an intersection needs members"})
        return attrs


class GeneratorSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=GENERATOR_KINDS)
    seed = serializers.IntegerField(min_value=0)
    min_items = serializers.IntegerField(min_value=2, required=False)
    max_items = serializers.IntegerField(min_value=2, required=False)
    max_universe = serializers.IntegerField(min_value=2, required=False)

    def validate(self, attrs):
        low = attrs.get("min_items", SmallInstanceCaps.min_items)
        high = attrs.get("max_items", SmallInstanceCaps.max_items)
        if low > high:
            raise serializers.ValidationError(
                {"max_items": f"must be at least min_items ({low}), got {high}"}
            )
        return attrs


class InstanceFileSerializer(serializers.Serializer):
    name = serializers.CharField(required=False)
    items = ItemSerializer(many=True, required=False)
    objective = ObjectiveSerializer(required=False)
    constraint = ConstraintSerializer(required=False)
    declared_p = FractionField(required=False, allow_null=True)
    generator = GeneratorSerializer(required=False)

    def validate(self, attrs):
        if "generator" in attrs:
            return attrs

        if "objective" not in attrs:
            raise serializers.ValidationError({"objective": "This field is required."})
        if attrs["objective"]["kind"] == "matchmaking":
            return attrs

        missing = [name for name in ("items", "constraint") if name not in attrs]
        if missing:
            raise serializers.ValidationError(
                {name: "This field is required." for name in missing}
            )
        return attrs
