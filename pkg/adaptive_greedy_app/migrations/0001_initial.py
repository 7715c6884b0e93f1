import uuid

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="ExperimentRun",
            fields=[
                (
                    "id",
                    models.UUIDField(
                        default=uuid.uuid4, editable=False, primary_key=True, serialize=False
                    ),
                ),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                ("updated_at", models.DateTimeField(auto_now=True)),
                (
                    "status",
                    models.CharField(
                        choices=[
                            ("pending", "Pending"),
                            ("processing", "Processing"),
                            ("completed", "Completed"),
                            ("failed", "Failed"),
                        ],
                        default="pending",
                        max_length=20,
                    ),
                ),
                ("instance_name", models.CharField(max_length=255)),
                ("policy_kind", models.CharField(max_length=40)),
                (
                    "eval_mode",
                    models.CharField(
                        choices=[("exact", "Exact"), ("mc", "Monte Carlo")], max_length=10
                    ),
                ),
                ("samples", models.IntegerField(blank=True, null=True)),
                ("seed", models.BigIntegerField(default=0)),
                (
                    "p_value",
                    models.CharField(
                        blank=True, help_text="Exact rational p", max_length=40, null=True
                    ),
                ),
                ("opt_adaptive", models.FloatField(blank=True, null=True)),
                ("opt_nonadaptive", models.FloatField(blank=True, null=True)),
                ("policy_value", models.FloatField(blank=True, null=True)),
                ("policy_stderr", models.FloatField(blank=True, null=True)),
                ("ratio", models.FloatField(blank=True, null=True)),
                ("bound", models.FloatField(blank=True, null=True)),
                ("runtime_ms", models.FloatField(blank=True, null=True)),
                ("error_message", models.JSONField(blank=True, null=True)),
            ],
            options={
                "ordering": ["-created_at"],
            },
        ),
    ]
