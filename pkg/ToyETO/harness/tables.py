from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from logger import get_logger

from .errors import ConfigError, MixedEnvironmentError
from .metrics import TEST_SPLITS, MetricsReport, step_to_half

logger = get_logger("harness")

ORACLE: str = "oracle"


def _check_reports(reports: Sequence[MetricsReport]) -> str:
    if not reports:
        raise ConfigError("At least one report is needed to emit tables")

    environments = sorted({report.env for report in reports})
    if len(environments) > 1:
        raise MixedEnvironmentError(f"Reports from {', '.join(environments)} can not share one table")

    return environments[0]


def per_seed_frame(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    rows = [
        {
            "method": report.method,
            "seed": report.seed,
            "split": split,
            "average_reward": metrics.average_reward,
            "success_rate": metrics.success_rate,
        }
        for report in reports
        for split, metrics in report.splits.items()
    ]
    return pd.DataFrame(rows, columns=["method", "seed", "split", "average_reward", "success_rate"])


def method_table(per_seed: pd.DataFrame, value: str) -> pd.DataFrame:
    """methods x splits table of the mean over seeds, methods in the order they first appear"""
    order: List[str] = list(dict.fromkeys(per_seed["method"]))
    table: pd.DataFrame = per_seed.pivot_table(index="method", columns="split", values=value, aggfunc="mean")
    return table.reindex(index=order, columns=[split for split in TEST_SPLITS if split in table.columns])


def iteration_frame(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    rows = []
    for report in reports:
        for row in report.iterations:
            record = {"method": report.method, "seed": report.seed, "iteration": row["iteration"]}
            for split in TEST_SPLITS:
                if split in row:
                    record[f"{split}_reward"] = row[split]["average_reward"]
                    record[f"{split}_success"] = row[split]["success_rate"]
            rows.append(record)
    return pd.DataFrame(rows)


def _mean_curve(curves: Sequence[List[float]]) -> List[float]:
    """pads every cumulative curve with its last value, then averages position-wise"""
    length: int = max(len(curve) for curve in curves)
    padded = np.array([list(curve) + [curve[-1] if curve else 0.0] * (length - len(curve)) for curve in curves])
    return padded.mean(axis=0).tolist()


def curve_frames(reports: Sequence[MetricsReport], split: str = "test_seen") -> Dict[str, pd.DataFrame]:
    """Function that builds one reward-vs-step frame per instruction

    Parameters

    reports : Sequence[MetricsReport]
        reports of one environment

    split : str
        split whose curves are emitted

    Returns

    Dict[str, pd.DataFrame]
        returns frames keyed by instruction id. Columns are step, the oracle and one mean curve
        per method. Environments without subgoal rewards give an empty dict
    """
    by_instruction: Dict[str, Dict[str, List[List[float]]]] = {}

    for report in reports:
        metrics = report.splits.get(split)
        if metrics is None:
            continue

        for instruction_id, curve in metrics.curves.items():
            by_instruction.setdefault(instruction_id, {}).setdefault(report.method, []).append(curve)

        for instruction_id, curve in report.oracle_curves.get(split, {}).items():
            if instruction_id in by_instruction:
                by_instruction[instruction_id][ORACLE] = [curve]

    frames: Dict[str, pd.DataFrame] = {}

    for instruction_id, methods in by_instruction.items():
        means: Dict[str, List[float]] = {method: _mean_curve(curves) for method, curves in methods.items()}
        length: int = max(len(curve) for curve in means.values())

        frame = pd.DataFrame({"step": np.arange(1, length + 1)})
        for method, curve in means.items():
            frame[method] = curve + [curve[-1]] * (length - len(curve))
        frames[instruction_id] = frame

    return frames


def efficiency_frame(reports: Sequence[MetricsReport], split: str = "test_seen") -> pd.DataFrame:
    """median step at which each method first reaches half of its final reward"""
    steps: Dict[str, List[int]] = {}

    for report in reports:
        metrics = report.splits.get(split)
        if metrics is None:
            continue

        for curve in metrics.curves.values():
            step: Optional[int] = step_to_half(curve)
            if step is not None:
                steps.setdefault(report.method, []).append(step)

    oracle = next((report.oracle_curves.get(split) for report in reports if report.oracle_curves.get(split)), {})
    for curve in oracle.values():
        step = step_to_half(curve)
        if step is not None:
            steps.setdefault(ORACLE, []).append(step)

    rows = [
        {"method": method, "median_step_to_half": float(np.median(values)), "n_instructions": len(values)}
        for method, values in steps.items()
    ]
    return pd.DataFrame(rows, columns=["method", "median_step_to_half", "n_instructions"])


def emit_tables(reports: Sequence[MetricsReport], output_dir: Union[str, Path]) -> Dict[str, Path]:
    """Function that writes the comparison tables of a set of reports as csv files

    Parameters

    reports : Sequence[MetricsReport]
        reports of one environment, any methods and seeds

    output_dir : Union[str, Path]
        directory the tables are written to

    Returns

    Dict[str, Path]
        returns the written files keyed rewards, success, per_seed, iterations, efficiency and curve:<id>
    """
    env: str = _check_reports(reports)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    per_seed: pd.DataFrame = per_seed_frame(reports)
    written: Dict[str, Path] = {}

    written["rewards"] = output_dir / f"{env}.rewards.csv"
    method_table(per_seed, "average_reward").to_csv(written["rewards"])

    written["success"] = output_dir / f"{env}.success.csv"
    method_table(per_seed, "success_rate").to_csv(written["success"])

    written["per_seed"] = output_dir / f"{env}.per_seed.csv"
    per_seed.to_csv(written["per_seed"], index=False)

    written["iterations"] = output_dir / f"{env}.iterations.csv"
    iteration_frame(reports).to_csv(written["iterations"], index=False)

    curves: Dict[str, pd.DataFrame] = curve_frames(reports)

    if curves:
        curve_dir: Path = output_dir / f"{env}.curves"
        curve_dir.mkdir(exist_ok=True)

        for instruction_id, frame in curves.items():
            written[f"curve:{instruction_id}"] = curve_dir / f"{instruction_id}.csv"
            frame.to_csv(written[f"curve:{instruction_id}"], index=False)

        written["efficiency"] = output_dir / f"{env}.efficiency.csv"
        efficiency_frame(reports).to_csv(written["efficiency"], index=False)

    logger.info(f"Wrote {len(written)} table files for {len(reports)} {env} reports to {output_dir}")

    return written
