"""
CPTrap - Result Artifacts

Deterministic serialization of results. CSV numbers are written with 17
significant digits and '\\n' line endings; JSON documents are key-sorted,
carry `schema_version` and `kind`, and encode complex numbers as
{"re": ..., "im": ...}. Identical inputs give byte-identical artifacts.
"""

import csv
import io
import json
import math
from typing import Any, Dict, Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from cptrap.bath import SusceptivitySet
from cptrap.config import SCHEMA_VERSION
from cptrap.errors import SchemaError
from cptrap.generator import TRAJECTORY_COLUMNS, DensityMatrix3, Trajectory
from cptrap.stationary import (
    BeatsDescriptor,
    FamilyDescriptor,
    StationaryResult,
    admissible_interval,
    check_density,
    conserved_C,
    family_matrix,
)

RESULT_KINDS = ("susceptivities", "stationary", "beats", "selftest", "table")

_REQUIRED_KEYS = {
    "susceptivities": ("bohr_frequency", "entries", "polarization_sums", "einstein_ratio"),
    "stationary": ("classification", "payload", "residual"),
    "beats": ("frequency", "damping", "initial_modulus"),
    "selftest": ("suites", "passed", "failed"),
    "table": ("columns", "rows"),
}

FAMILY_COLUMNS = ("s", "rho_e", "rho_g", "C", "min_eigenvalue", "admissible")


def format_number(x: Any) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    return format(float(x), ".17g")


def write_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]], stream: TextIO):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_number(x) for x in row])


def csv_text(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    write_csv(columns, rows, buffer)
    return buffer.getvalue()


# =============================================================================
# JSON encoding
# =============================================================================

def _clean(value: Any) -> Any:
    """Plain JSON types only; complex -> {re, im}; non-finite floats -> null."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": _clean(float(value.real)), "im": _clean(float(value.imag))}
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


def result_document(kind: str, body: Dict[str, Any]) -> Dict[str, Any]:
    if kind not in RESULT_KINDS:
        raise SchemaError("kind", f"unknown result kind {kind!r}")
    doc = {"schema_version": SCHEMA_VERSION, "kind": kind}
    doc.update(_clean(body))
    return doc


def json_text(document: Dict[str, Any]) -> str:
    return json.dumps(document, sort_keys=True, indent=2, allow_nan=False) + "\n"


def parse_result_document(source: Union[str, Dict[str, Any]]) -> Dict[str, Any]:
    """
    Re-read an emitted result document and check it against the schema.

    Raises:
        SchemaError: invalid JSON, wrong schema_version, unknown kind, missing keys
    """
    if isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as e:
            raise SchemaError("<root>", f"invalid JSON: {e}")
    else:
        doc = source
    if not isinstance(doc, dict):
        raise SchemaError("<root>", "expected an object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError("schema_version", f"expected {SCHEMA_VERSION}, got {doc.get('schema_version')!r}")
    kind = doc.get("kind")
    if kind not in RESULT_KINDS:
        raise SchemaError("kind", f"unknown result kind {kind!r}")
    for key in _REQUIRED_KEYS[kind]:
        if key not in doc:
            raise SchemaError(key, f"missing from {kind} result")
    return doc


# =============================================================================
# Result bodies
# =============================================================================

def density_body(rho: DensityMatrix3) -> Dict[str, Any]:
    return {
        "matrix": [[complex(x) for x in row] for row in rho.matrix],
        "coordinates": rho.to_vector(),
        "C": rho.C,
        "s": rho.s,
        "min_eigenvalue": rho.min_eigenvalue,
    }


def susceptivity_document(sus: SusceptivitySet) -> Dict[str, Any]:
    return result_document("susceptivities", sus.to_document())


def family_body(family: FamilyDescriptor) -> Dict[str, Any]:
    return {
        "R": family.R,
        "s_min": family.s_min,
        "s_max": family.s_max,
        "kernel_dimension": family.kernel_dimension,
        "excited_coefficients": list(family.excited_coefficients),
        "ground_coefficients": list(family.ground_coefficients),
        "extremal_states": [
            density_body(family.member(family.s_min)),
            density_body(family.member(family.s_max)),
        ],
    }


def beats_body(descriptor: BeatsDescriptor) -> Dict[str, Any]:
    return {
        "frequency": descriptor.frequency,
        "damping": descriptor.damping,
        "initial_modulus": descriptor.initial_modulus,
        "limit_s": descriptor.limit_s,
    }


def stationary_document(result: StationaryResult) -> Dict[str, Any]:
    payload: Optional[Dict[str, Any]]
    if isinstance(result.payload, DensityMatrix3):
        payload = density_body(result.payload)
    elif isinstance(result.payload, FamilyDescriptor):
        payload = family_body(result.payload)
    elif isinstance(result.payload, BeatsDescriptor):
        payload = beats_body(result.payload)
    else:
        payload = None
    return result_document("stationary", {
        "classification": result.kind,
        "payload": payload,
        "residual": result.residual,
        "kernel_dimension": result.kernel_dimension,
    })


def beats_document(descriptor: BeatsDescriptor, include_trajectory: bool = False) -> Dict[str, Any]:
    """Beats result; include_trajectory embeds the verification run as columns and rows."""
    body = beats_body(descriptor)
    if include_trajectory and descriptor.trajectory is not None:
        body["trajectory"] = {
            "columns": list(TRAJECTORY_COLUMNS),
            "rows": [list(r) for r in descriptor.trajectory.rows()],
        }
    return result_document("beats", body)


def family_rows(R: float, grid: Sequence[float]):
    """Rows of FAMILY_COLUMNS for each s in grid; members past s_max are flagged, not rejected."""
    s_min, s_max = admissible_interval(R)
    for s in grid:
        m = family_matrix(R, s)
        admissible = (s_min - 1e-12 <= s <= s_max + 1e-12) and check_density(m).ok
        rho = DensityMatrix3(m)
        yield [s, m[2, 2].real, m[0, 0].real, conserved_C(rho), rho.min_eigenvalue, admissible]


def trajectory_csv(trajectory: Trajectory) -> str:
    return csv_text(TRAJECTORY_COLUMNS, trajectory.rows())


def table_document(name: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Dict[str, Any]:
    return result_document("table", {"name": name, "columns": list(columns), "rows": [list(r) for r in rows]})
