"""Reading and writing histogram tables, fit documents and plot-ready curve exports.

JSON is the canonical table format::

    {"schema_version": "1",
     "variables": [{"name": "Y", "role": "response"}, {"name": "X", "role": "predictor"}],
     "units": [{"id": "1", "values": {"Y": [{"a": 33.29, "b": 37.52, "w": 0.6}, ...], "X": 13.2}}]}

A cell is a list of bins or a bare number (a point mass). The CSV format is
long-form, one bin per row: ``unit,variable,bin_lower,bin_upper,weight``. A
header row is optional. The response is the variable named by ``response``
or, failing that, the first variable to appear.
"""
from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, TextIO

import numpy as np

from .errors import ParseError, ValidationError
from .histcore import Histogram, PiecewiseLinear, histogram_problems, qf_eval
from .models import ModelFit, SymbolicTable, predicted_functions

SCHEMA_VERSION = "1"
CSV_COLUMNS = ("unit", "variable", "bin_lower", "bin_upper", "weight")


def _tool_version() -> str:
    from . import __version__

    return __version__


# --------------------------------------------------------------------------- tables


def _cell_bins(raw, where: str, findings: list[str]):
    """Normalize a JSON cell into ``(lower, upper, weight)`` arrays, or record why not."""
    if isinstance(raw, bool):
        findings.append(f"{where}: cell must be a number or a list of bins")
        return None
    if isinstance(raw, (int, float)):
        return np.array([raw], float), np.array([raw], float), np.array([1.0])
    if not isinstance(raw, list):
        findings.append(f"{where}: cell must be a number or a list of bins")
        return None
    rows = []
    for k, b in enumerate(raw):
        if isinstance(b, dict) and {"a", "b", "w"} <= b.keys():
            vals = (b["a"], b["b"], b["w"])
        elif isinstance(b, (list, tuple)) and len(b) == 3:
            vals = tuple(b)
        else:
            findings.append(f"{where}: bin {k} must be {{a, b, w}} or [a, b, w]")
            return None
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
            findings.append(f"{where}: bin {k} has a non-numeric field")
            return None
        rows.append(vals)
    if not rows:
        findings.append(f"{where}: histogram has no bins")
        return None
    a, b, w = (np.array(c, dtype=float) for c in zip(*rows))
    return a, b, w


def _build_table(unit_ids, variables, response, cells, findings) -> SymbolicTable:
    """Assemble a table from ``cells[(unit, var)] -> (a, b, w)``, collecting every problem first."""
    if response is None:
        findings.append("table has no response variable")
    elif response not in variables:
        findings.append(f"response variable {response!r} not found")
    if len(variables) < 1:
        findings.append("table has no variables")
    hists = {}
    for u in unit_ids:
        for v in variables:
            key = (u, v)
            if key not in cells:
                findings.append(f"unit {u}, variable {v}: missing cell")
                continue
            if cells[key] is None:
                continue
            problems = histogram_problems(*cells[key])
            if problems:
                findings.extend(f"unit {u}, variable {v}: {p}" for p in problems)
            else:
                hists[key] = Histogram(*cells[key])
    if findings:
        raise ValidationError(findings)
    return SymbolicTable(
        tuple(unit_ids),
        response,
        tuple(hists[(u, response)] for u in unit_ids),
        {v: tuple(hists[(u, v)] for u in unit_ids) for v in variables if v != response},
    )


def table_from_document(doc: dict) -> SymbolicTable:
    """Validate a decoded TableDocument and build the table."""
    if not isinstance(doc, dict):
        raise ParseError("table document must be a JSON object")
    if "schema_version" not in doc:
        raise ParseError(f"missing schema_version (expected {SCHEMA_VERSION!r})")
    version = str(doc["schema_version"])
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION!r}")
    findings: list[str] = []
    variables, response = [], None
    for k, var in enumerate(doc.get("variables") or []):
        if not isinstance(var, dict) or "name" not in var:
            findings.append(f"variables[{k}]: needs a name")
            continue
        name, role = str(var["name"]), var.get("role", "predictor")
        if name in variables:
            findings.append(f"variable {name}: declared twice")
            continue
        if role == "response":
            if response is not None:
                findings.append(f"variable {name}: second response variable (already {response})")
            response = name
        elif role != "predictor":
            findings.append(f"variable {name}: unknown role {role!r}")
        variables.append(name)
    units = doc.get("units")
    if not isinstance(units, list) or not units:
        raise ValidationError(findings + ["table has no units"])
    unit_ids, cells = [], {}
    for k, unit in enumerate(units):
        if not isinstance(unit, dict) or "id" not in unit:
            findings.append(f"units[{k}]: needs an id")
            continue
        uid = str(unit["id"])
        if uid in unit_ids:
            findings.append(f"unit {uid}: duplicate id")
            continue
        unit_ids.append(uid)
        raw_cells = unit.get("values", {})
        for v in raw_cells:
            if v not in variables:
                findings.append(f"unit {uid}, variable {v}: not declared")
        for v in variables:
            if v in raw_cells:
                cells[(uid, v)] = _cell_bins(raw_cells[v], f"unit {uid}, variable {v}", findings)
    return _build_table(unit_ids, variables, response, cells, findings)


def table_to_document(tbl: SymbolicTable) -> dict:
    variables = [{"name": tbl.response_name, "role": "response"}]
    variables += [{"name": v, "role": "predictor"} for v in tbl.predictors]
    units = []
    for i, uid in enumerate(tbl.unit_ids):
        cells = {
            name: [{"a": float(a), "b": float(b), "w": float(w)} for a, b, w in zip(col[i].lower, col[i].upper, col[i].weight)]
            for name, col in tbl.variables.items()
        }
        units.append({"id": str(uid), "values": cells})
    return {"schema_version": SCHEMA_VERSION, "variables": variables, "units": units}


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"line {line}: {column} {text!r} is not a number") from None


def parse_csv(text: str, response: str | None = None) -> SymbolicTable:
    """Long-form CSV, one bin per row; an empty ``bin_upper`` and ``weight`` gives a point mass."""
    unit_ids, variables, rows = [], [], {}
    reader = csv.reader(io.StringIO(text))
    for lineno, rec in enumerate(reader, start=1):
        if not rec or all(not f.strip() for f in rec):
            continue
        rec = [f.strip() for f in rec]
        if lineno == 1 and tuple(f.lower() for f in rec) == CSV_COLUMNS:
            continue
        if len(rec) == 3:
            rec = rec + ["", ""]
        if len(rec) != 5:
            raise ParseError(f"line {lineno}: expected 5 columns ({','.join(CSV_COLUMNS)}), got {len(rec)}")
        unit, var = rec[0], rec[1]
        if not unit or not var:
            raise ParseError(f"line {lineno}: unit and variable must be non-empty")
        a = _parse_float(rec[2], lineno, "bin_lower")
        b = _parse_float(rec[3], lineno, "bin_upper") if rec[3] else a
        w = _parse_float(rec[4], lineno, "weight") if rec[4] else 1.0
        if unit not in unit_ids:
            unit_ids.append(unit)
        if var not in variables:
            variables.append(var)
        rows.setdefault((unit, var), []).append((a, b, w))
    if not unit_ids:
        raise ValidationError(["table has no units"])
    cells = {}
    for key, bins in rows.items():
        bins.sort(key=lambda r: (r[0], r[1]))
        cells[key] = tuple(np.array(c, dtype=float) for c in zip(*bins))
    if response is None:
        response = variables[0]
    return _build_table(unit_ids, variables, response, cells, [])


def _format_for(path, fmt):
    if fmt:
        return fmt.lower()
    suffix = Path(str(path)).suffix.lower()
    return "csv" if suffix == ".csv" else "json"


def parse_table(source, format: str | None = None, response: str | None = None) -> SymbolicTable:
    """Read a table from a path or a text stream.

    ``format`` defaults from the file suffix (JSON otherwise). A stream without
    an explicit format is read as JSON if it starts with ``{`` and as CSV otherwise.
    """
    if hasattr(source, "read"):
        text, name = source.read(), getattr(source, "name", "<stream>")
        if format:
            fmt = format.lower()
        else:
            fmt = "json" if text.lstrip().startswith("{") else "csv"
    else:
        name = os.fspath(source)
        fmt = _format_for(name, format)
        try:
            text = Path(name).read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"cannot read {name}: {exc.strerror or exc}") from None
    if fmt == "csv":
        return parse_csv(text, response)
    if fmt != "json":
        raise ParseError(f"unknown table format {fmt!r}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{name}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    tbl = table_from_document(doc)
    if response is not None and response != tbl.response_name:
        raise ValidationError([f"response variable is {tbl.response_name!r}, not {response!r}"])
    return tbl


def serialize_table(tbl: SymbolicTable, format: str = "json") -> str:
    if format == "json":
        return json.dumps(table_to_document(tbl), indent=1) + "\n"
    if format != "csv":
        raise ValueError(f"unknown table format {format!r}")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for i, uid in enumerate(tbl.unit_ids):
        for name, col in tbl.variables.items():
            h = col[i]
            for a, b, w in zip(h.lower, h.upper, h.weight):
                writer.writerow([uid, name, repr(float(a)), repr(float(b)), repr(float(w))])
    return out.getvalue()


def load_blood() -> SymbolicTable:
    """The embedded ten-unit Blood table (Y: hematocrit, X: hemoglobin)."""
    text = resources.files("histreg").joinpath("data/blood.json").read_text(encoding="utf-8")
    return table_from_document(json.loads(text))


# --------------------------------------------------------------------------- fits


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


@dataclass
class FitDocument:
    """Serializable record of a fit: coefficients, fit indices, decomposition, bootstrap and run metadata."""

    model: str
    response: str
    predictors: list[str]
    coefficients: dict[str, float]
    gof: dict | None = None
    decomposition: dict | None = None
    bootstrap: dict | None = None
    metadata: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    @classmethod
    def from_fit(cls, fit: ModelFit, response: str, *, decomposition=None, bootstrap=None, **meta) -> FitDocument:
        gof = fit.diagnostics.to_dict() if fit.diagnostics is not None else None
        metadata = {"tool_version": _tool_version(), **_jsonable(fit.metadata), **_jsonable(meta)}
        return cls(
            fit.kind.value,
            response,
            list(fit.predictor_names),
            fit.params,
            _jsonable(gof),
            _jsonable(decomposition),
            _jsonable(bootstrap),
            metadata,
        )

    def to_fit(self) -> ModelFit:
        return ModelFit.from_params(self.model, self.coefficients, self.predictors, metadata=dict(self.metadata))

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "model": self.model,
            "response": self.response,
            "predictors": list(self.predictors),
            "coefficients": dict(self.coefficients),
            "gof": self.gof,
            "decomposition": self.decomposition,
            "bootstrap": self.bootstrap,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> FitDocument:
        try:
            return cls(
                d["model"], d["response"], list(d["predictors"]), dict(d["coefficients"]),
                d.get("gof"), d.get("decomposition"), d.get("bootstrap"), dict(d.get("metadata") or {}),
                str(d.get("schema_version", SCHEMA_VERSION)),
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"fit document is missing or has a malformed field: {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> FitDocument:
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid fit JSON at line {exc.lineno}: {exc.msg}") from None

    def __eq__(self, other):
        return isinstance(other, FitDocument) and self.to_dict() == other.to_dict()


def read_fit(path) -> FitDocument:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {os.fspath(path)}: {exc.strerror or exc}") from None
    return FitDocument.from_json(text)


# --------------------------------------------------------------------------- curves

CURVE_COLUMNS = ("unit", "t", "observed", "predicted", "residual")


def curve_grid(grid_points: int, *functions: PiecewiseLinear) -> np.ndarray:
    """``grid_points`` uniform points on [0, 1] merged with every breakpoint of ``functions``."""
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    pts = [np.linspace(0.0, 1.0, grid_points)] + [f.t for f in functions]
    return np.unique(np.concatenate(pts))


def export_curves(
    tbl: SymbolicTable,
    fit: ModelFit | None = None,
    grid_points: int = 101,
    predictions: list[PiecewiseLinear] | None = None,
) -> list[dict[str, Any]]:
    """Rows ``(unit, t, observed, predicted, residual)`` per unit, left limits at jumps."""
    if predictions is None:
        if fit is None:
            raise ValueError("export_curves needs a fit or explicit predictions")
        predictions = predicted_functions(tbl, fit)
    rows = []
    for uid, h, q in zip(tbl.unit_ids, tbl.response, predictions):
        y = h.quantile_function
        t = curve_grid(grid_points, y, q)
        obs, pred = qf_eval(y, t), qf_eval(q, t)
        rows.extend(
            {"unit": uid, "t": float(a), "observed": float(o), "predicted": float(p), "residual": float(o - p)}
            for a, o, p in zip(t, obs, pred)
        )
    return rows


def write_curves(rows, stream: TextIO, format: str = "csv", digits: int | None = None) -> None:
    """Write exported rows as CSV or JSON; ``digits`` rounds CSV numbers to that many significant digits."""
    if format == "json":
        json.dump(rows, stream, indent=1)
        stream.write("\n")
        return
    writer = csv.DictWriter(stream, CURVE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (_num(v, digits) if isinstance(v, float) else v) for k, v in r.items()})


def _num(x: float, digits: int | None) -> str:
    return repr(x) if digits is None else f"{x:.{digits}g}"


def integrate_curves(rows) -> float:
    """Trapezoid estimate of ``sum_i ∫ residual_i(t)^2 dt`` from exported rows."""
    total = 0.0
    by_unit: dict[str, list] = {}
    for r in rows:
        by_unit.setdefault(str(r["unit"]), []).append((float(r["t"]), float(r["residual"])))
    for pts in by_unit.values():
        t, e = np.array(pts).T
        total += float(np.trapezoid(e * e, t))
    return total
