"""
Report emission: regression tables (CSV/JSON), analysis summaries, human
tables and run manifests.

Machine outputs are byte-deterministic: fixed column order, stable row
order, 17 significant digits for CSV floats.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from config import ENDOWMENT, HUMAN_DECIMALS, MACHINE_FLOAT_FORMAT, MULTIPLIER
from tools.analysis import BEHAVIOR_TERMS, REPORT_COLUMNS, BehaviorRegression, ConditionComparison, RegressionReport
from tools.errors import ConfigError, DataFormatError
from tools.game_engine import GameConfig
from tools.stats import OLSResult, significance_stars
from tools.trust_engine import TrustParams

logger = logging.getLogger(__name__)

BEHAVIOR_COLUMNS = ["dataset", "game_condition", "level", "round", "role", "n", "df", "r_squared", "adj_r_squared"] + [
    f"{stat}_{term}" for term in BEHAVIOR_TERMS for stat in ("b", "t", "p")
]


class RunConfig(BaseModel):
    """Everything needed to reproduce a command's output."""

    model_config = ConfigDict(frozen=True)

    command: str
    trust_params: TrustParams = TrustParams()
    game: Optional[GameConfig] = None
    conditions: List[str] = []
    sessions: int = 1
    roster: Optional[List[Dict[str, Any]]] = None
    input_path: Optional[str] = None
    against_path: Optional[str] = None
    seed: Optional[int] = None
    start_round: Optional[int] = None
    model: Optional[str] = None
    level: Optional[str] = None
    endowment: int = ENDOWMENT
    multiplier: int = MULTIPLIER
    output_format: str = "csv"

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class FitDiagnostics(BaseModel):
    coefficients: List[Optional[float]]
    std_errors: List[Optional[float]]
    t_values: List[Optional[float]]
    p_values: List[Optional[float]]
    stars: str
    r_squared: float
    adj_r_squared: float
    f_statistic: Optional[float]
    df_resid: int


class ReportRow(BaseModel):
    dataset: str
    game_condition: str
    round: int
    role: str
    df: int
    n: int
    t_trust: Optional[float]
    adj_r2_trust: float
    t_reputation: Optional[float]
    adj_r2_reputation: float
    trust: Optional[FitDiagnostics] = None
    reputation: Optional[FitDiagnostics] = None


class ReportDocument(BaseModel):
    """Shape of a JSON regression report; `ReportDocument.model_json_schema()` is its schema."""

    intercept_included: bool = True
    config_hash: Optional[str] = None
    seed: Optional[int] = None
    run_config: Optional[Dict[str, Any]] = None
    rows: List[ReportRow]


def _finite(values) -> List[Optional[float]]:
    return [float(v) if np.isfinite(v) else None for v in np.atleast_1d(values)]


def _diagnostics(fit: Optional[OLSResult]) -> Optional[FitDiagnostics]:
    if fit is None:
        return None
    return FitDiagnostics(
        coefficients=_finite(fit.coefficients),
        std_errors=_finite(fit.std_errors),
        t_values=_finite(fit.t_values),
        p_values=_finite(fit.p_values),
        stars=significance_stars(float(fit.p_values[1])),
        r_squared=fit.r_squared,
        adj_r_squared=fit.adj_r_squared,
        f_statistic=fit.f_statistic if np.isfinite(fit.f_statistic) else None,
        df_resid=fit.df_resid,
    )


def _finite_or_none(value: float) -> Optional[float]:
    return float(value) if np.isfinite(value) else None


def write_report(
    reports: Sequence[RegressionReport],
    fmt: str,
    path: Union[str, Path],
    run_config: Optional[RunConfig] = None,
) -> Path:
    """
    Writes a predictive-comparison report.

    Args:
        reports: Rows from predictive_comparison.
        fmt: 'csv' (table columns only) or 'json' (table plus fit diagnostics and provenance).
        path: Output file.
        run_config: Embedded in JSON output for provenance.
    """
    path = Path(path)
    if fmt == "json":
        document = ReportDocument(
            config_hash=run_config.config_hash() if run_config else None,
            seed=run_config.seed if run_config else None,
            run_config=run_config.model_dump(mode="json") if run_config else None,
            rows=[
                ReportRow(
                    dataset=r.dataset,
                    game_condition=r.game_condition,
                    round=r.round,
                    role=r.role,
                    df=r.df,
                    n=r.n,
                    t_trust=_finite_or_none(r.t_trust),
                    adj_r2_trust=r.adj_r2_trust,
                    t_reputation=_finite_or_none(r.t_reputation),
                    adj_r2_reputation=r.adj_r2_reputation,
                    trust=_diagnostics(r.trust_fit),
                    reputation=_diagnostics(r.reputation_fit),
                )
                for r in reports
            ],
        )
        path.write_text(document.model_dump_json(indent=2) + "\n", encoding="utf-8")
    elif fmt == "csv":
        frame = pd.DataFrame([[getattr(r, c) for c in REPORT_COLUMNS] for r in reports], columns=REPORT_COLUMNS)
        frame.to_csv(path, index=False, lineterminator="\n", float_format=MACHINE_FLOAT_FORMAT, encoding="utf-8")
    else:
        raise ConfigError(f"Unsupported report format {fmt!r}; expected csv or json")
    logger.info(f"Wrote {len(reports)} report rows to {path}")
    return path


def write_report_schema(report_path: Union[str, Path]) -> Path:
    """Writes the JSON Schema of regression reports next to `report_path` ('<stem>.schema.json')."""
    report_path = Path(report_path)
    path = report_path.with_name(f"{report_path.stem}.schema.json")
    path.write_text(json.dumps(ReportDocument.model_json_schema(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_report_csv(path: Union[str, Path]) -> List[RegressionReport]:
    """Re-parses a CSV written by write_report (diagnostics are not part of the CSV)."""
    frame = pd.read_csv(path, dtype={"dataset": str, "game_condition": str, "role": str}, float_precision="round_trip", keep_default_na=False)
    missing = [c for c in REPORT_COLUMNS if c not in frame.columns]
    if missing:
        raise DataFormatError(f"missing report columns {missing}", line=1)
    return [
        RegressionReport(
            dataset=row.dataset,
            game_condition=row.game_condition,
            round=int(row.round),
            role=row.role,
            df=int(row.df),
            t_trust=float(row.t_trust),
            adj_r2_trust=float(row.adj_r2_trust),
            t_reputation=float(row.t_reputation),
            adj_r2_reputation=float(row.adj_r2_reputation),
            n=int(row.n),
        )
        for row in frame.itertuples(index=False)
    ]


def format_table(reports: Sequence[RegressionReport], decimals: int = HUMAN_DECIMALS) -> str:
    """Human-readable trust-vs-reputation table with significance stars."""
    header = f"{'Dataset':<14}{'Game':<10}{'Round':>6}{'Role':>10}{'df':>6}{'t trust':>12}{'adjR2':>8}{'t rep':>12}{'adjR2':>8}"
    lines = [header, "-" * len(header)]
    for r in reports:
        t_stars = significance_stars(float(r.trust_fit.p_values[1])) if r.trust_fit else ""
        rep_stars = significance_stars(float(r.reputation_fit.p_values[1])) if r.reputation_fit else ""
        lines.append(
            f"{r.dataset:<14}{r.game_condition:<10}{r.round:>6}{r.role:>10}{r.df:>6}"
            f"{f'{r.t_trust:.{decimals}f}{t_stars}':>12}{r.adj_r2_trust:>8.{decimals}f}"
            f"{f'{r.t_reputation:.{decimals}f}{rep_stars}':>12}{r.adj_r2_reputation:>8.{decimals}f}"
        )
    lines.append("'*' p < 0.05, '**' p < 0.01, '***' p < 0.001")
    return "\n".join(lines)


def comparisons_table(comparisons: Sequence[ConditionComparison]) -> List[Dict[str, Any]]:
    """Flat rows (one per role and condition) for CSV/JSON output."""
    rows = []
    for c in comparisons:
        rows.append({
            "role": c.role,
            "baseline": c.baseline,
            "condition": c.condition,
            "n_pairs": c.n_pairs,
            "ci_lo": c.interval.lo if c.interval else None,
            "ci_hi": c.interval.hi if c.interval else None,
            "ci_df": c.interval.df if c.interval else None,
            "mean_diff": c.interval.mean_diff if c.interval else None,
            "degenerate": c.interval.degenerate if c.interval else None,
            "welch_t": c.welch.t if c.welch else None,
            "welch_df": c.welch.df if c.welch else None,
            "welch_p": c.welch.p_value if c.welch else None,
        })
    return rows


def write_table(rows: Sequence[Dict[str, Any]], columns: List[str], fmt: str, path: Union[str, Path]) -> Path:
    """Writes plain dict rows as CSV or JSON."""
    path = Path(path)
    if fmt == "json":
        path.write_text(json.dumps([{c: row.get(c) for c in columns} for row in rows], indent=2) + "\n", encoding="utf-8")
    else:
        frame = pd.DataFrame([[row.get(c) for c in columns] for row in rows], columns=columns)
        frame.to_csv(path, index=False, lineterminator="\n", float_format=MACHINE_FLOAT_FORMAT, encoding="utf-8")
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def write_manifest(run_config: RunConfig, out_dir: Union[str, Path], outputs: Sequence[str]) -> Path:
    """manifest.json: run config verbatim, its hash, the seed and the files produced."""
    path = Path(out_dir) / "manifest.json"
    manifest = {
        "config_hash": run_config.config_hash(),
        "seed": run_config.seed,
        "run_config": run_config.model_dump(mode="json"),
        "outputs": sorted(outputs),
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def behavior_table(models: Sequence[BehaviorRegression]) -> List[Dict[str, Any]]:
    """Flat rows for trust-behavior models; terms a model lacks are left empty."""
    rows = []
    for m in models:
        row = {
            "dataset": m.dataset,
            "game_condition": m.game_condition,
            "level": m.level,
            "round": m.round,
            "role": m.role,
            "n": m.n,
            "df": m.df,
            "r_squared": m.r_squared,
            "adj_r_squared": m.adj_r_squared,
        }
        for term in BEHAVIOR_TERMS:
            values = m.term(term)
            for stat, value in zip(("b", "t", "p"), values or (None, None, None)):
                row[f"{stat}_{term}"] = value
        rows.append(row)
    return rows


def format_behavior_table(models: Sequence[BehaviorRegression], decimals: int = HUMAN_DECIMALS) -> str:
    """Coefficients with significance stars, one line per model."""
    header = f"{'Game':<10}{'Round':>6}{'Role':>10}{'n':>6}" + "".join(f"{t:>18}" for t in BEHAVIOR_TERMS) + f"{'adjR2':>8}"
    lines = [header, "-" * len(header)]
    for m in models:
        cells = []
        for term in BEHAVIOR_TERMS:
            values = m.term(term)
            text = f"{values[0]:.{decimals}f}{significance_stars(values[2])}" if values else ""
            cells.append(f"{text:>18}")
        round_text = "avg" if m.round is None else str(m.round)
        lines.append(f"{m.game_condition:<10}{round_text:>6}{m.role:>10}{m.n:>6}" + "".join(cells) + f"{m.adj_r_squared:>8.{decimals}f}")
    lines.append("'*' p < 0.05, '**' p < 0.01, '***' p < 0.001")
    return "\n".join(lines)
