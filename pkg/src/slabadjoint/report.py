"""Table and JSON emitters.

TSV numbers carry 4 significant digits, JSON numbers 17. Units sit in the
column header; in tables whose rows mix units the row label carries them
and the first column header says so.
"""
from __future__ import annotations

import json
import math
import os
from typing import Sequence

import numpy as np

from .model import PARAM_LABELS, PARAM_NAMES
from .sensitivities import CANONICAL_ROUTES, RESPONSE_UNITS, _format_units, sensitivity_units
from .uncertainty import covariance_matrix, response_moments

RESPONSE_UNIT_TEXT = _format_units(RESPONSE_UNITS)


def fmt_tsv(x) -> str:
    if isinstance(x, str):
        return x
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return f"{x:.4g}"


def write_tsv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(fmt_tsv(v) for v in row) + "\n")


def _json_text(obj, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_json_text(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_json_text(v, indent + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(inner + _json_text(v, indent + 1) for v in seq) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    return json.dumps(obj)


def dumps(obj) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _json_text(obj) + "\n"


# -- table builders --------------------------------------------------------------

def response_names(analyses) -> list:
    return [f"R{i + 1} (b={a.detector_b:g} cm)" for i, a in enumerate(analyses)]


def _first_rows(analyses, method: str, relative: bool):
    rows = []
    vecs = []
    for a in analyses:
        if relative:
            vecs.append(a.relative(method)[0].values)
        else:
            vecs.append((a.first_closed if method == "closed" else a.first_quadrature).values)
    for i in range(4):
        units = "dimensionless" if relative else sensitivity_units(i)
        rows.append([f"S{i + 1}({PARAM_LABELS[i]}) [{units}]"] + [v[i] for v in vecs])
    return rows


def _second_rows(analyses, method: str, relative: bool):
    mats = []
    for a in analyses:
        if relative:
            mats.append(a.relative(method)[1].values)
        else:
            mats.append((a.second_closed if method == "closed" else a.second_quadrature).values)
    rows = []
    for i, j in CANONICAL_ROUTES:
        units = "dimensionless" if relative else sensitivity_units(i - 1, j - 1)
        rows.append([f"S{i}{j} [{units}]"] + [m[i - 1, j - 1] for m in mats])
    return rows


def sensitivity_tables(analyses, method: str = "closed") -> dict:
    """Tables 1-4 as {file stem: (header, rows)}."""
    names = response_names(analyses)
    abs_head = ["quantity [units]"] + [f"{n} [units of row]" for n in names]
    rel_head = ["quantity"] + [f"{n} [dimensionless]" for n in names]
    suffix = "" if method == "closed" else "_quadrature"
    return {
        f"table1_first_order_absolute{suffix}": (abs_head, _first_rows(analyses, method, False)),
        f"table2_first_order_relative{suffix}": (rel_head, _first_rows(analyses, method, True)),
        f"table3_second_order_absolute{suffix}": (abs_head, _second_rows(analyses, method, False)),
        f"table4_second_order_relative{suffix}": (rel_head, _second_rows(analyses, method, True)),
    }


def moments_for(analyses, cases) -> dict:
    """{case name: [ResponseMoments per detector]} from the closed-form path."""
    return {
        c.name: [response_moments(a.response_closed, a.first_closed, a.second_closed, c, a.params)
                 for a in analyses]
        for c in cases
    }


def uncertainty_tables(analyses, cases) -> dict:
    names = response_names(analyses)
    moments = moments_for(analyses, cases)
    tables = {
        "table6_relative_std": (
            ["case"] + [f"sigma_rel {n} [dimensionless]" for n in names],
            [[c.name] + [m.relative_std for m in moments[c.name]] for c in cases],
        ),
        "table7_skewness": (
            ["case"] + [f"gamma1 {n} [dimensionless]" for n in names],
            [[c.name] + [m.skewness for m in moments[c.name]] for c in cases],
        ),
    }
    u = RESPONSE_UNIT_TEXT
    for c in cases:
        rows = []
        for n, m in zip(names, moments[c.name]):
            rows.append([n, m.nominal, m.expected_value, m.variance, m.std, m.third_central_moment,
                         m.relative_std, m.skewness])
        tables[f"moments_case_{c.name}"] = (
            ["response", f"nominal [{u}]", f"expected value [{u}]", f"variance [({u})^2]",
             f"std [{u}]", f"third central moment [({u})^3]", "relative std [dimensionless]",
             "skewness [dimensionless]"],
            rows,
        )
        p0 = analyses[0].params
        _, corr = covariance_matrix([(a.first_closed, a.second_closed) for a in analyses], c, p0)
        tables[f"correlation_case_{c.name}"] = (
            ["response"] + [f"{n} [dimensionless]" for n in names],
            [[n] + list(row) for n, row in zip(names, corr)],
        )
    return tables


def detector_tables(analysis) -> dict:
    sym_rows = [[f"S{i}{j} vs S{j}{i}", sensitivity_units(i - 1, j - 1), r.method, r.forward, r.reverse,
                 r.rel_discrepancy] for r in analysis.symmetry for i, j in (r.pair,)]
    return {
        "symmetry": (
            ["pair", "units", "method", "S_ij [units column]", "S_ji [units column]",
             "relative discrepancy [dimensionless]"],
            sym_rows,
        ),
    }


def solve_count_text(analysis) -> str:
    led = analysis.ledger
    lines = [f"adjoint solves per response: {led.adjoint_solves}"]
    for tag, n in sorted(led.by_tag().items()):
        lines.append(f"{tag}: {n}")
    lines.append("second-order forward-sensitivity route would need: 14 solves")
    return "\n".join(lines) + "\n"


def verification_table(checks) -> tuple:
    rows = []
    for c in checks:
        status = "pass" if c.passed else ("fail" if c.gating else "advisory-fail")
        det = "" if c.detector is None else fmt_tsv(c.detector)
        rows.append([c.name, det, status, c.measured, c.tolerance, c.detail])
    return (["check", "detector b [cm]", "status", "measured [dimensionless]",
             "tolerance [dimensionless]", "detail"], rows)


# -- JSON document ---------------------------------------------------------------

def _vector_dict(vec) -> dict:
    return {f"S{i + 1}": float(vec.values[i]) for i in range(4)}


def _matrix_dict(mat) -> dict:
    return {f"S{i}{j}": float(mat.values[i - 1, j - 1]) for i, j in CANONICAL_ROUTES}


def analysis_record(a) -> dict:
    rel_c = a.relative("closed")
    rel_q = a.relative("quadrature")
    return {
        "detector_b_cm": a.detector_b,
        "grid_nodes": a.grid.n_nodes,
        "response": {"closed_form": a.response_closed, "numeric": a.response_numeric,
                     "units": RESPONSE_UNIT_TEXT},
        "first_order": {
            "units": {f"S{i + 1}": sensitivity_units(i) for i in range(4)},
            "closed_form": _vector_dict(a.first_closed),
            "quadrature": _vector_dict(a.first_quadrature),
            "relative_closed_form": _vector_dict(rel_c[0]),
            "relative_quadrature": _vector_dict(rel_q[0]),
        },
        "second_order": {
            "units": {f"S{i}{j}": sensitivity_units(i - 1, j - 1) for i, j in CANONICAL_ROUTES},
            "closed_form": _matrix_dict(a.second_closed),
            "quadrature": _matrix_dict(a.second_quadrature),
            "relative_closed_form": _matrix_dict(rel_c[1]),
            "relative_quadrature": _matrix_dict(rel_q[1]),
        },
        "symmetry": [
            {"pair": list(r.pair), "method": r.method, "S_ij": r.forward, "S_ji": r.reverse,
             "relative_discrepancy": r.rel_discrepancy}
            for r in a.symmetry
        ],
        "solves": {"adjoint_solves_per_response": a.ledger.adjoint_solves, "by_tag": a.ledger.by_tag()},
    }


def results_document(cfg, analyses, checks=None) -> dict:
    doc = {
        "parameters": dict(cfg.params),
        "parameter_order": list(PARAM_NAMES),
        "grid_nodes": cfg.n_nodes,
        "detectors": [analysis_record(a) for a in analyses],
        "cases": {},
    }
    moments = moments_for(analyses, cfg.cases)
    p0 = analyses[0].params
    for c in cfg.cases:
        cov, corr = covariance_matrix([(a.first_closed, a.second_closed) for a in analyses], c, p0)
        doc["cases"][c.name] = {
            "relative_sd": dict(zip(PARAM_NAMES, c.rel_sd)),
            "moments": [
                {"detector_b_cm": a.detector_b, "nominal": m.nominal, "expected_value": m.expected_value,
                 "variance": m.variance, "third_central_moment": m.third_central_moment,
                 "relative_std": m.relative_std, "skewness": m.skewness}
                for a, m in zip(analyses, moments[c.name])
            ],
            "covariance": cov.tolist(),
            "correlation": corr.tolist(),
        }
    if checks is not None:
        doc["verification"] = verification_document(checks)
    return doc


def verification_document(checks) -> dict:
    return {
        "checks": [
            {"check": c.name, "detector_b_cm": c.detector, "passed": bool(c.passed), "gating": c.gating,
             "measured": c.measured, "tolerance": c.tolerance, "detail": c.detail}
            for c in checks
        ],
        "all_gating_checks_passed": all(c.passed for c in checks if c.gating),
    }


def write_verification(out_dir: str, fmt: str, checks) -> list:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if fmt in ("tsv", "both"):
        path = os.path.join(out_dir, "verification.tsv")
        write_tsv(path, *verification_table(checks))
        written.append(path)
    if fmt in ("json", "both"):
        path = os.path.join(out_dir, "verification.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps(verification_document(checks)))
        written.append(path)
    return written


def write_outputs(out_dir: str, fmt: str, cfg, analyses, tables_only: bool = False) -> list:
    """Write tables and per-detector reports; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if not analyses:
        return written
    if fmt in ("tsv", "both"):
        tables = {}
        tables.update(sensitivity_tables(analyses, "closed"))
        tables.update(uncertainty_tables(analyses, cfg.cases))
        if tables_only:
            tables = {k: v for k, v in tables.items() if k.startswith("table")}
        else:
            tables.update(sensitivity_tables(analyses, "quadrature"))
        for stem, (header, rows) in tables.items():
            path = os.path.join(out_dir, stem + ".tsv")
            write_tsv(path, header, rows)
            written.append(path)
        if not tables_only:
            for idx, a in enumerate(analyses):
                sub = os.path.join(out_dir, f"detector_R{idx + 1}_b{a.detector_b:g}")
                os.makedirs(sub, exist_ok=True)
                for stem, (header, rows) in detector_tables(a).items():
                    path = os.path.join(sub, stem + ".tsv")
                    write_tsv(path, header, rows)
                    written.append(path)
                path = os.path.join(sub, "solve_count.txt")
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(solve_count_text(a))
                written.append(path)
    if fmt in ("json", "both"):
        path = os.path.join(out_dir, "results.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps(results_document(cfg, analyses)))
        written.append(path)
    return written
