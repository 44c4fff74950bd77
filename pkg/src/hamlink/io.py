"""Serialisation of run artifacts.

Every real number is written as a 17-significant-digit decimal string so
that files round-trip exactly and diff cleanly across platforms.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from hamlink.core import format_real, format_sequence_line, parse_sequence_line
from hamlink.potential import HypothesisReport
from hamlink.solver import Certificate, CriticalPointRecord, LinkingReport

SOLUTIONS_CSV = "solutions.csv"
SOLUTIONS_META = "solutions_meta.json"
RESULTS = "results.json"
RUN_INFO = "run_info.json"


def reals(values) -> list[str]:
    return [format_real(v) for v in np.asarray(values, dtype=float).reshape(-1)]


def write_json(path: Path, doc: Any) -> None:
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8", newline="\n")


def read_json(path: Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_eigen_csv(path: Path, eigenvalues, vectors) -> None:
    """One row per eigenpair: eigenvalue, v1..vM (vectors given as columns)."""
    m = vectors.shape[0]
    lines = [",".join(["eigenvalue"] + [f"v{i}" for i in range(1, m + 1)])]
    for k, lam in enumerate(eigenvalues):
        lines.append(",".join([format_real(lam)] + reals(vectors[:, k])))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_rows_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)] + [",".join(reals(r)) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def hypothesis_doc(r: HypothesisReport, max_witnesses: int = 20) -> dict:
    return {
        "hypothesis": r.hypothesis,
        "verdict": r.verdict,
        "constants": {k: format_real(v) for k, v in r.constants.items()},
        "sample_count": r.sample_count,
        "violation_count": len(r.violations),
        "witnesses": [
            {"n": v.n, "point": reals(v.point), "lhs": format_real(v.lhs), "rhs": format_real(v.rhs)}
            for v in r.violations[:max_witnesses]
        ],
    }


def record_doc(r: CriticalPointRecord) -> dict:
    return {
        "orbit_id": r.orbit_id,
        "classification": r.classification,
        "value": format_real(r.value),
        "grad_norm": format_real(r.grad_norm),
        "morse_index": r.morse.index,
        "near_null": r.morse.near_null,
        "morse_caveat": r.morse.caveat,
        "source": r.source,
        "point": reals(r.point.values),
        "residual_pointwise": {
            "max_abs": format_real(r.residual.max_abs),
            "at_n0": format_real(r.residual.at_n0),
            "per_index": reals(r.residual.per_index),
        },
    }


def linking_doc(rep: LinkingReport) -> dict:
    opt = lambda v: None if v is None else format_real(v)  # noqa: E731
    return {
        "sigma": format_real(rep.sigma),
        "rho": format_real(rep.rho),
        "e_direction": reals(rep.e_direction),
        "a1_min_on_sphere": format_real(rep.a1_min_on_sphere),
        "a1_samples": int(rep.a1_values.size),
        "a2_max_on_boundary": format_real(rep.a2_max_on_boundary),
        "a2_max_plus": format_real(rep.a2_values_plus.max()),
        "a2_max_minus": format_real(rep.a2_values_minus.max()),
        "r_outer_plus": opt(rep.r_outer_plus),
        "r_outer_minus": opt(rep.r_outer_minus),
        "z_max": format_real(rep.z_max),
        "a1_ok": rep.a1_ok,
        "a2_ok": rep.a2_ok,
        "message": rep.message,
    }


def certificate_doc(cert: Certificate) -> dict:
    return {
        "verdict": cert.verdict,
        "failures": list(cert.failures),
        "solver_error": cert.solver_error,
        "c0": None if cert.c0 is None else format_real(cert.c0),
        "case": cert.case,
        "qualifying_orbits": [r.orbit_id for r in cert.qualifying],
        "residuals": {
            str(oid): {
                conv: {"max_abs": format_real(rep.max_abs), "at_n0": format_real(rep.at_n0), "per_index": reals(rep.per_index)}
                for conv, rep in by_conv.items()
            }
            for oid, by_conv in cert.residuals.items()
        },
    }


def write_solutions(out: Path, records: list[CriticalPointRecord]) -> None:
    """Points in the sequence literal format plus a metadata sidecar, line i <-> entry i."""
    text = "".join(format_sequence_line(r.point) + "\n" for r in records)
    (out / SOLUTIONS_CSV).write_text(text, encoding="utf-8", newline="\n")
    meta = [
        {
            "value": format_real(r.value),
            "grad_norm": format_real(r.grad_norm),
            "morse_index": r.morse.index,
            "orbit_id": r.orbit_id,
            "classification": r.classification,
            "residual_max_abs": format_real(r.residual.max_abs),
            "residual_at_n0": format_real(r.residual.at_n0),
        }
        for r in records
    ]
    write_json(out / SOLUTIONS_META, meta)


def read_solutions(out: Path):
    lines = (out / SOLUTIONS_CSV).read_text(encoding="utf-8").splitlines()
    points = [parse_sequence_line(line) for line in lines if line.strip()]
    meta = read_json(out / SOLUTIONS_META)
    if len(meta) != len(points):
        raise ValueError(f"{SOLUTIONS_CSV} has {len(points)} rows but {SOLUTIONS_META} has {len(meta)} entries")
    return points, meta
