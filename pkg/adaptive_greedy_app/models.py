import uuid
from fractions import Fraction
from typing import Any, Dict, List

from django.db import models


class ExperimentRun(models.Model):
    STATUS_CHOICES = [
        ("pending", "Pending"),
        ("processing", "Processing"),
        ("completed", "Completed"),
        ("failed", "Failed"),
    ]
    EVAL_MODE_CHOICES = [
        ("exact", "Exact"),
        ("mc", "Monte Carlo"),
    ]

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default="pending")

    instance_name = models.CharField(max_length=255)
    policy_kind = models.CharField(max_length=40)
    eval_mode = models.CharField(max_length=10, choices=EVAL_MODE_CHOICES)
    samples = models.IntegerField(null=True, blank=True)
    seed = models.BigIntegerField(default=0)

    p_value = models.CharField(max_length=40, null=True, blank=True, help_text="Exact rational p")
    opt_adaptive = models.FloatField(null=True, blank=True)
    opt_nonadaptive = models.FloatField(null=True, blank=True)
    policy_value = models.FloatField(null=True, blank=True)
    policy_stderr = models.FloatField(null=True, blank=True)
    ratio = models.FloatField(null=True, blank=True)
    bound = models.FloatField(null=True, blank=True)
    runtime_ms = models.FloatField(null=True, blank=True)
    error_message = models.JSONField(null=True, blank=True)

    class Meta:
        ordering = ["-created_at"]

    def __str__(self):
        return f"Experiment run {self.id} on {self.instance_name} - {self.status}"

    def complete(self, record) -> None:
        self.p_value = str(record.p_value)
        self.opt_adaptive = record.opt_adaptive
        self.opt_nonadaptive = record.opt_nonadaptive
        self.policy_value = record.policy_value
        self.policy_stderr = record.policy_stderr
        self.ratio = record.ratio
        self.bound = record.bound
        self.runtime_ms = record.runtime_ms
        self.status = "completed"
        self.save()

    def fail(self, errors: List[Dict[str, Any]]) -> None:
        self.status = "failed"
        self.error_message = errors
        self.save()

    def to_record(self):
        from .experiments import ExperimentRecord

        if self.status != "completed":
            raise ValueError(f"run {self.id} has status {self.status}, not completed")
        return ExperimentRecord(
            instance_name=self.instance_name,
            policy_kind=self.policy_kind,
            p_value=Fraction(self.p_value),
            opt_adaptive=self.opt_adaptive,
            opt_nonadaptive=self.opt_nonadaptive,
            policy_value=self.policy_value,
            ratio=self.ratio,
            bound=self.bound,
            eval_mode=self.eval_mode,
            samples=self.samples,
            seed=self.seed,
            runtime_ms=self.runtime_ms,
            policy_stderr=self.policy_stderr,
        )
