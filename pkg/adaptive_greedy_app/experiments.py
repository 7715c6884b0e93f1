import csv
import io
import logging
from dataclasses import asdict, dataclass
from datetime import datetime
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from .conf import library_setting
from .constraints import estimate_p
from .exceptions import AdaptiveGreedyError, InstanceTooLarge, NoPAvailable, ParseError
from .instance_files import write_atomic
from .instances import Instance
from .oracle import optimal_adaptive_value, optimal_nonadaptive_value
from .policies import PolicyConfig, expected_value_exact, expected_value_monte_carlo

logger = logging.getLogger("adaptive_greedy_app.experiments")

CSV_HEADER = [
    "instance",
    "policy",
    "p",
    "opt_adaptive",
    "opt_nonadaptive",
    "policy_value",
    "ratio",
    "bound",
    "eval_mode",
    "samples",
    "seed",
    "runtime_ms",
]
EVAL_MODES = ("exact", "mc")
BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class ExperimentRecord:
    instance_name: str
    policy_kind: str
    p_value: Fraction
    opt_adaptive: Optional[float]
    opt_nonadaptive: Optional[float]
    policy_value: float
    ratio: Optional[float]
    bound: float
    eval_mode: str
    samples: Optional[int]
    seed: int
    runtime_ms: float
    policy_stderr: Optional[float] = None

    @property
    def meets_bound(self) -> Optional[bool]:
        if self.ratio is None:
            return None
        return self.ratio >= self.bound - BOUND_SLACK

    def csv_row(self) -> List[str]:
        return [
            self.instance_name,
            self.policy_kind,
            format_number(self.p_value),
            format_number(self.opt_adaptive),
            format_number(self.opt_nonadaptive),
            format_number(self.policy_value),
            format_number(self.ratio),
            format_number(self.bound),
            self.eval_mode,
            "" if self.samples is None else str(self.samples),
            str(self.seed),
            format_number(self.runtime_ms),
        ]

    def as_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["p_value"] = str(self.p_value)
        return data


def format_number(value: Optional[Union[float, int, Fraction]]) -> str:
    if value is None:
        return ""
    return f"{float(value):.12g}"


def approximation_ratio(policy_value: float, opt_adaptive: float) -> float:
    if opt_adaptive == 0:
        return 1.0
    return policy_value / opt_adaptive


def resolve_p(instance: Instance) -> Fraction:
    """estimate_p when the ground is small enough, otherwise the instance's declared p."""
    if instance.system.ground_size <= library_setting("P_ESTIMATE_MAX_GROUND"):
        return estimate_p(instance.system).p_value
    if instance.declared_p is not None:
        logger.debug(f"Using declared p {instance.declared_p} for {instance.name}")
        return instance.declared_p
    raise NoPAvailable(
        f"no p available: ground of {instance.system.ground_size} items is above the estimate cap "
        f"and {instance.name} declares no p"
    )


def _evaluate_policy(
    instance: Instance, policy: PolicyConfig, eval_mode: str, samples: int, seed: int
) -> Tuple[float, Optional[float]]:
    if eval_mode == "exact":
        value = expected_value_exact(instance.model, instance.objective, instance.system, policy)
        return value, None
    estimate = expected_value_monte_carlo(
        instance.model, instance.objective, instance.system, policy, samples, seed
    )
    return estimate.mean, estimate.stderr


def run_experiment(
    instance: Instance,
    policy: PolicyConfig,
    eval_mode: str = "exact",
    samples: int = 1000,
    seed: int = 0,
    with_oracle: bool = False,
    out: Optional[Union[str, Path]] = None,
    record: bool = False,
) -> ExperimentRecord:
    """
    Evaluate one policy on one instance and report it against the 1/(p+1) bound.

    With out, the record is appended to that CSV file; with record, the run is also stored as an
    ExperimentRun row.
    """
    if eval_mode not in EVAL_MODES:
        raise ValueError(f"eval mode must be one of {EVAL_MODES}, got {eval_mode!r}")

    run = None
    if record:
        from .models import ExperimentRun

        run = ExperimentRun.objects.create(
            instance_name=instance.name,
            policy_kind=policy.policy_kind.value,
            eval_mode=eval_mode,
            samples=samples if eval_mode == "mc" else None,
            seed=seed,
        )

    start_time = datetime.now()
    try:
        logger.info(
            f"Starting experiment on {instance.name} - policy {policy.policy_kind.value}, "
            f"eval {eval_mode}, oracle {with_oracle}"
        )
        if run is not None:
            run.status = "processing"
            run.save()
            logger.debug(f"Run {run.id} status updated to 'processing'")

        p_value = resolve_p(instance)
        bound = 1.0 / float(p_value + 1)
        policy_value, stderr = _evaluate_policy(instance, policy, eval_mode, samples, seed)

        opt_adaptive = opt_nonadaptive = ratio = None
        if with_oracle:
            opt_adaptive = optimal_adaptive_value(
                instance.model, instance.objective, instance.system
            ).value
            try:
                opt_nonadaptive = optimal_nonadaptive_value(
                    instance.model, instance.objective, instance.system
                ).value
            except InstanceTooLarge as e:
                logger.debug(f"Skipping non-adaptive optimum for {instance.name}: {e}")
            ratio = approximation_ratio(policy_value, opt_adaptive)

        runtime_ms = (datetime.now() - start_time).total_seconds() * 1000.0
        result = ExperimentRecord(
            instance_name=instance.name,
            policy_kind=policy.policy_kind.value,
            p_value=p_value,
            opt_adaptive=opt_adaptive,
            opt_nonadaptive=opt_nonadaptive,
            policy_value=policy_value,
            ratio=ratio,
            bound=bound,
            eval_mode=eval_mode,
            samples=samples if eval_mode == "mc" else None,
            seed=seed,
            runtime_ms=runtime_ms,
            policy_stderr=stderr,
        )

        if eval_mode == "exact" and result.meets_bound is False:
            logger.warning(
                f"{instance.name}: ratio {ratio:.12g} is below the 1/(p+1) bound {bound:.12g}"
            )
        if out is not None:
            append_records(out, [result])
        if run is not None:
            run.complete(result)

        logger.info(
            f"Experiment on {instance.name} completed in {runtime_ms / 1000.0:.2f} seconds: "
            f"value {policy_value:.12g}, ratio {format_number(ratio) or 'n/a'}"
        )
        return result

    except AdaptiveGreedyError as e:
        logger.error(f"Experiment on {instance.name} failed: {e}")
        if run is not None:
            run.fail(e.errors or [{"error": str(e)}])
        raise
    except Exception as e:
        elapsed = (datetime.now() - start_time).total_seconds()
        logger.error(f"Experiment on {instance.name} failed after {elapsed:.2f} seconds: {e}")
        if run is not None:
            run.fail([{"error": str(e)}])
        raise


def _render(rows: List[List[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerows(rows)
    return buffer.getvalue()


def append_records(path: Union[str, Path], records: List[ExperimentRecord]) -> None:
    """Append rows to a results CSV, writing the header first when the file is new."""
    path = Path(path)
    existing = ""
    if path.exists():
        existing = path.read_text(encoding="utf-8")
    if existing:
        header = next(csv.reader(io.StringIO(existing)), [])
        if header != CSV_HEADER:
            raise ParseError(f"parse error at {path}: existing CSV header does not match")
        if not existing.endswith("\n"):
            existing += "\n"
    else:
        existing = _render([CSV_HEADER])

    write_atomic(path, existing + _render([r.csv_row() for r in records]))
    logger.debug(f"Appended {len(records)} rows to {path}")


def read_records(path: Union[str, Path]) -> List[Dict[str, str]]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def record_from_row(row: Dict[str, str]) -> ExperimentRecord:
    def number(key: str) -> Optional[float]:
        return float(row[key]) if row[key] != "" else None

    return ExperimentRecord(
        instance_name=row["instance"],
        policy_kind=row["policy"],
        p_value=Fraction(row["p"]),
        opt_adaptive=number("opt_adaptive"),
        opt_nonadaptive=number("opt_nonadaptive"),
        policy_value=float(row["policy_value"]),
        ratio=number("ratio"),
        bound=float(row["bound"]),
        eval_mode=row["eval_mode"],
        samples=int(row["samples"]) if row["samples"] else None,
        seed=int(row["seed"]),
        runtime_ms=float(row["runtime_ms"]),
    )
