"""CSV ingestion and JSON documents for estimates, oracle values and coverage studies."""
from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .core import INDEX_NAMES, PARAM_NAMES, Dataset, ExtendedIndex, ParameterVector, pack
from .effects import EffectSet
from .inference import Interval, SandwichResult, confidence_intervals, z_value
from .stack import residual_norm

REPORT_SCHEMA = "mednnt/report/v1"
COVERAGE_SCHEMA = "mednnt/coverage/v1"
ORACLE_SCHEMA = "mednnt/oracle/v1"
EXAMPLE_SCHEMA = "mednnt/example/v1"

DEFAULT_COLUMNS = {"outcome": "I", "exposure": "A", "mediator": "M", "confounder": "L"}


class ParseError(ValueError):
    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.row = row
        self.column = column


def load_schema(name: str) -> dict:
    """Bundled JSON schema, e.g. ``load_schema("report")``."""
    text = resources.files("mednnt").joinpath("schemas", f"{name}-v1.schema.json").read_text()
    return json.loads(text)


def read_csv(path, columns: dict[str, str] | None = None) -> Dataset:
    """Read a header-row CSV; ``columns`` maps outcome/exposure/mediator/confounder to headers."""
    columns = {**DEFAULT_COLUMNS, **(columns or {})}
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for role, name in columns.items():
            if name not in header:
                raise ParseError(f"missing {role} column", column=name)
        cols = {role: [] for role in columns}
        for row_no, row in enumerate(reader, start=1):
            for role, name in columns.items():
                raw = (row.get(name) or "").strip()
                if role == "confounder":
                    try:
                        value = float(raw)
                    except ValueError:
                        raise ParseError(f"not a number: {raw!r}", row_no, name) from None
                    if not math.isfinite(value):
                        raise ParseError(f"not finite: {raw!r}", row_no, name)
                else:
                    if raw not in ("0", "1", "0.0", "1.0"):
                        raise ParseError(f"expected 0 or 1, got {raw!r}", row_no, name)
                    value = float(raw)
                cols[role].append(value)
    return Dataset(I=cols["outcome"], A=cols["exposure"], M=cols["mediator"], L=cols["confounder"])


def write_csv(data: Dataset, path, columns: dict[str, str] | None = None) -> None:
    """Write ``data`` so that :func:`read_csv` restores it bit for bit."""
    columns = {**DEFAULT_COLUMNS, **(columns or {})}
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([columns[r] for r in ("outcome", "exposure", "mediator", "confounder")])
        for rec in data.records():
            w.writerow([rec.outcome, rec.exposure, rec.mediator, repr(rec.confounder)])


def _num(x):
    """JSON-safe float: infinities become the string ``"inf"``, NaN becomes null."""
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return None
    return x


def _interval_doc(iv: Interval) -> dict:
    return {
        "estimate": _num(iv.estimate),
        "se": _num(iv.se),
        "lower": _num(iv.lower),
        "upper": _num(iv.upper),
        "infinite": iv.infinite,
    }


def estimate_report(data: Dataset, theta: ParameterVector, result: SandwichResult, family,
                    level: float = 0.95, seed: int | None = None, source: str | None = None) -> dict:
    """The estimate report: indices, effects, coefficients and diagnostics."""
    ci = confidence_intervals(result, theta, level)
    z = z_value(level)
    vec = pack(theta)
    cov = result.covariance
    groups = ("group0", "group1", "marginal")

    effects = {}
    for key, offset in (("p_indirect", 17), ("p_direct", 20)):
        effects[key] = {g: _interval_doc(ci[PARAM_NAMES[offset + k]]) for k, g in enumerate(groups)}
    total = {}
    for k, g in enumerate(groups):
        i, d = 17 + k, 20 + k
        est = vec[i] + vec[d]
        var = cov[i, i] + cov[d, d] + 2.0 * cov[i, d]
        se = math.sqrt(max(var, 0.0)) if np.isfinite(var) else None
        lo, hi = (est - z * se, est + z * se) if se is not None else (None, None)
        total[g] = _interval_doc(Interval(est, lo, hi, se))
    effects["p_total"] = total

    coefficients = {
        "outcome": {n: _interval_doc(ci[n]) for n in PARAM_NAMES[0:4]},
        "mediator": {n: _interval_doc(ci[n]) for n in PARAM_NAMES[4:7]},
    }
    return {
        "schema": REPORT_SCHEMA,
        "metadata": {
            "n": data.n, "n0": data.n0, "n1": data.n1,
            "family": str(getattr(family, "value", family)), "level": level,
            "software_version": __version__, "seed": seed, "source": source,
        },
        "indices": {n: _interval_doc(ci[n]) for n in INDEX_NAMES},
        "effects": effects,
        "coefficients": coefficients,
        "diagnostics": {
            "residual_norm": residual_norm(data, theta, family),
            "bread_condition": _num(result.condition),
            "singular_covariance": result.singular,
            "infinite_indices": theta.infinite_indices(),
        },
    }


def effects_document(effects: EffectSet) -> dict:
    doc = effects.as_dict()
    doc["indices"] = {k: _num(float(v)) for k, v in effects.indices.items()}
    return doc


def example_report(effects: EffectSet, exposed_share: float) -> dict:
    doc = effects_document(effects)
    doc["schema"] = EXAMPLE_SCHEMA
    doc["exposed_share"] = exposed_share
    return doc


def oracle_document(result, config) -> dict:
    return {
        "schema": ORACLE_SCHEMA,
        "config": config.to_dict(),
        "draws": result.draws,
        "seed": result.seed,
        "software_version": __version__,
        "truth": effects_document(result.effects),
        "truth_se": result.effect_se,
        "nested_diagnostic": effects_document(result.nested),
        "nested_se": result.nested_se,
    }


def coverage_document(report) -> dict:
    return {
        "schema": COVERAGE_SCHEMA,
        "config": report.config.to_dict(),
        "software_version": __version__,
        "truth": {k: _num(v) for k, v in report.truth.items()},
        "coverage": {k: _num(v) for k, v in report.coverage.items()},
        "retained": report.retained,
        "excluded": report.excluded,
        "percent_excluded": report.percent_excluded,
        "excluded_by_reason": report.excluded_by_reason,
        "mean_estimate": {k: _num(v) for k, v in report.mean_estimate.items()},
        "median_estimate": {k: _num(v) for k, v in report.median_estimate.items()},
        "median_abs_error": {k: _num(v) for k, v in report.median_abs_error.items()},
    }


def write_replications_csv(report, path) -> None:
    """One row per replication: status, estimates, interval limits and coverage flags."""
    fields = ["rep", "status"]
    for k in INDEX_NAMES:
        fields += [k, f"{k}_lower", f"{k}_upper", f"{k}_covered"]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(fields)
        for r in report.replications:
            row = [r.rep, r.status]
            for k in INDEX_NAMES:
                cov = r.covered[k]
                row += [_csv(r.estimates[k]), _csv(r.lower[k]), _csv(r.upper[k]),
                        "" if cov is None else int(cov)]
            w.writerow(row)


def _csv(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return "inf" if math.isinf(x) else repr(float(x))


def dump_json(doc: dict, path=None) -> str:
    text = json.dumps(doc, indent=2, allow_nan=False) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def format_index_table(indices: dict[str, ExtendedIndex]) -> str:
    lines = []
    for name in INDEX_NAMES:
        v = indices[name]
        lines.append(f"{name:<5} {'inf' if v.is_infinite else f'{v.value:.4f}'}")
    return "\n".join(lines)
