import csv
import io
import json

import pytest

from histreg import FitDocument, Histogram, ParseError, SymbolicTable, ValidationError, export_curves, fit_model, parse_table, serialize_table
from histreg.tableio import curve_grid, integrate_curves, parse_csv, table_from_document, table_to_document, write_curves

from oracles import random_table


def doc(units, variables=(("Y", "response"), ("X", "predictor"))):
    return {
        "schema_version": "1",
        "variables": [{"name": n, "role": r} for n, r in variables],
        "units": [{"id": uid, "values": values} for uid, values in units],
    }


def test_blood_fixture(blood):
    assert blood.n == 10
    assert blood.response_name == "Y" and blood.predictor_names == ["X"]
    assert blood.unit_ids == tuple(str(i) for i in range(1, 11))
    first = blood.response[0]
    assert first.lower.tolist() == [33.29, 37.52] and first.upper.tolist() == [37.52, 39.61]


def test_csv_point_mass_row():
    tbl = parse_csv("u1,Y,1,2,1.0\nu1,X,2,2,1.0\n")
    x = tbl.predictors["X"][0]
    assert x == Histogram.point(2.0)
    assert tbl.response_name == "Y"


def test_csv_header_bin_order_and_short_rows():
    text = "unit,variable,bin_lower,bin_upper,weight\na,X,3\na,Y,2,3,0.5\na,Y,0,1,0.5\n"
    tbl = parse_csv(text, response="Y")
    assert tbl.response[0].lower.tolist() == [0.0, 2.0]
    assert tbl.predictors["X"][0] == Histogram.point(3.0)


def test_json_scalar_cell():
    tbl = table_from_document(doc([("a", {"Y": 1.5, "X": [[0, 1, 1.0]]})]))
    assert tbl.response[0] == Histogram.point(1.5)
    assert tbl.predictors["X"][0] == Histogram.interval(0, 1)


def test_weights_off_by_a_percent_names_the_unit():
    bad = doc([("u7", {"Y": [{"a": 0, "b": 1, "w": 0.5}, {"a": 1, "b": 2, "w": 0.49}], "X": 1.0})])
    with pytest.raises(ValidationError) as exc:
        table_from_document(bad)
    assert len(exc.value.findings) == 1
    assert "unit u7" in exc.value.findings[0] and "variable Y" in exc.value.findings[0]


def test_every_bad_unit_is_reported():
    units = [
        ("a", {"Y": [[0, 1, 0.5]], "X": 1.0}),
        ("b", {"Y": 1.0, "X": [[2, 1, 1.0]]}),
        ("c", {"Y": 2.0, "X": 1.0}),
        ("d", {"Y": [[0, 2, 0.5], [1, 3, 0.5]], "X": 1.0}),
    ]
    with pytest.raises(ValidationError) as exc:
        table_from_document(doc(units))
    units_named = {f.split(",")[0] for f in exc.value.findings}
    assert units_named == {"unit a", "unit b", "unit d"}
    assert len(exc.value.findings) == 3


def test_structural_problems():
    with pytest.raises(ValidationError, match="missing cell"):
        table_from_document(doc([("a", {"Y": 1.0})]))
    with pytest.raises(ValidationError, match="no response"):
        table_from_document(doc([("a", {"Y": 1.0})], variables=(("Y", "predictor"),)))
    with pytest.raises(ValidationError, match="second response"):
        table_from_document(doc([("a", {"Y": 1.0, "X": 1.0})], variables=(("Y", "response"), ("X", "response"))))
    with pytest.raises(ParseError, match="schema_version"):
        table_from_document({"schema_version": "2"})
    with pytest.raises(ParseError, match="missing schema_version"):
        table_from_document({"units": []})


def test_parse_errors_carry_context(tmp_path):
    with pytest.raises(ParseError, match="line 2"):
        parse_csv("a,Y,1,2,1\na,X,one,2,1\n")
    with pytest.raises(ParseError, match="line 1"):
        parse_csv("a,Y,1,2\n")
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema_version": "1",\n "units": [}')
    with pytest.raises(ParseError, match="line 2"):
        parse_table(bad)
    missing = tmp_path / "missing.json"
    with pytest.raises(ParseError, match="missing.json"):
        parse_table(missing)


@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_stream_format_is_detected(rng, fmt):
    tbl = random_table(rng)
    text = serialize_table(tbl, fmt)
    assert parse_table(io.StringIO(text), response="Y") == tbl


@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_round_trip(rng, fmt):
    for _ in range(25):
        tbl = random_table(rng, point_prob=0.2)
        text = serialize_table(tbl, fmt)
        again = parse_table(io.StringIO(text), fmt, response="Y" if fmt == "csv" else None)
        assert again == tbl


def test_round_trip_renormalized_weights():
    h = Histogram.from_bins([(0, 1, 0.3333333), (1, 2, 0.3333333), (2, 3, 0.3333333)])
    tbl = SymbolicTable(("a",), "Y", [h], {"X": [h]})
    for fmt in ("json", "csv"):
        assert parse_table(io.StringIO(serialize_table(tbl, fmt)), fmt) == tbl


def test_fit_document_round_trip(blood):
    fit = fit_model(blood, "bd")
    d = FitDocument.from_fit(fit, "Y", decomposition={"ssy": 1.0}, seed=0)
    again = FitDocument.from_json(d.to_json())
    assert again == d
    assert again.to_fit().params == fit.params
    assert again.metadata["covariance"] == "billard" and "note" in again.metadata
    assert again.metadata["seed"] == 0 and again.metadata["tool_version"]
    with pytest.raises(ParseError):
        FitDocument.from_json('{"model": "iv"}')


def test_export_identical_curves():
    u = Histogram.interval(0, 1)
    tbl = SymbolicTable(("a",), "Y", [u], {"X": [u]})
    rows = export_curves(tbl, predictions=[u.quantile_function], grid_points=3)
    assert [r["t"] for r in rows] == [0.0, 0.5, 1.0]
    assert all(abs(r["residual"]) < 1e-15 for r in rows)


def test_export_contains_all_knots(blood):
    fit = fit_model(blood, "db", diagnostics=False)
    rows = export_curves(blood, fit, grid_points=5)
    for uid, h in zip(blood.unit_ids, blood.response):
        ts = {r["t"] for r in rows if r["unit"] == uid}
        assert set(h.quantile_function.t) <= ts
    assert curve_grid(2, blood.response[0].quantile_function).tolist() == [0.0, 0.6, 1.0]


def test_exported_curves_reintegrate_to_sse(blood):
    fit = fit_model(blood, "iv")
    buf = io.StringIO()
    write_curves(export_curves(blood, fit, grid_points=1001), buf)
    buf.seek(0)
    rows = list(csv.DictReader(buf))
    assert integrate_curves(rows) == pytest.approx(fit.diagnostics.sse, abs=1e-3)


def test_curves_json(blood):
    buf = io.StringIO()
    write_curves(export_curves(blood, fit_model(blood, "iv"), grid_points=3), buf, "json")
    data = json.loads(buf.getvalue())
    assert set(data[0]) == {"unit", "t", "observed", "predicted", "residual"}


def test_document_structure(blood):
    d = table_to_document(blood)
    assert d["variables"][0] == {"name": "Y", "role": "response"}
    assert len(d["units"]) == 10
