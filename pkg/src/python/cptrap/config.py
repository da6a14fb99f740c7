"""
CPTrap - Run Configuration

Parses the JSON run document into validated, immutable settings. Every
field has a default, so an empty document is a complete configuration
(thermal bath at beta = 1, w = 1, gaussian formfactors, dark-state preset).

Schema violations (unknown keys, wrong types) raise SchemaError naming the
dotted field path; physically impossible values raise PhysicsDomainError.
The only environment override is CPTRAP_OUTPUT_DIR, which anchors relative
output paths.
"""

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

from cptrap.bath import (
    DEFAULT_CUTOFF_FACTOR,
    DEFAULT_PANEL_LIMIT,
    DEFAULT_TOLERANCE,
    BathConfig,
    DispersionSpec,
    FormFactor,
    OccupationSpectrum,
)
from cptrap.errors import CPTrapError, PhysicsDomainError, SchemaError
from cptrap.generator import DensityMatrix3
from cptrap.stationary import PRESET_NAMES, check_density, preset_state

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

SWEEP_PARAMETERS = ("s", "N", "beta", "omega")
OUTPUT_FORMATS = ("csv", "json")

_PROFILE_KEYS = {
    "gaussian": ("amplitude", "center", "width"),
    "lorentzian": ("amplitude", "center", "halfwidth"),
    "shell": ("amplitude", "inner", "outer"),
}
_OCCUPATION_KEYS = {
    "fock": (),
    "flat": ("level",),
    "planck": ("beta",),
    "shifted-window": ("level", "inner", "outer"),
}

DEFAULT_PROFILE = {"kind": "gaussian", "amplitude": 1.0, "center": 1.0, "width": 1.0}
DEFAULT_OCCUPATION = {"kind": "planck", "beta": 1.0}


@dataclass(frozen=True)
class Numerics:
    dt: Optional[float] = None
    horizon: float = 10.0
    samples: int = 100
    quadrature_tolerance: float = DEFAULT_TOLERANCE
    panel_limit: int = DEFAULT_PANEL_LIMIT
    cutoff_factor: float = DEFAULT_CUTOFF_FACTOR
    workers: int = 1
    require_oscillation: bool = True
    exact: bool = False


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    grid: Tuple[float, ...]


@dataclass(frozen=True)
class FamilySpec:
    ratio: Optional[float] = None
    points: int = 11


@dataclass(frozen=True)
class OutputSpec:
    path: Optional[str] = None
    format: str = "csv"

    def resolved_path(self) -> Optional[str]:
        """Output path, anchored at CPTRAP_OUTPUT_DIR when relative."""
        if self.path is None:
            return None
        base = os.environ.get("CPTRAP_OUTPUT_DIR")
        if base and not os.path.isabs(self.path):
            return os.path.join(base, self.path)
        return self.path


@dataclass(frozen=True, eq=False)
class RunConfig:
    bath: BathConfig
    initial_state: DensityMatrix3
    initial_state_label: str = "NC"
    numerics: Numerics = field(default_factory=Numerics)
    sweep: Optional[SweepSpec] = None
    family: FamilySpec = field(default_factory=FamilySpec)
    seed: int = 0
    output: OutputSpec = field(default_factory=OutputSpec)
    digest: str = ""


# =============================================================================
# Field readers
# =============================================================================

def _section(value: Any, path: str, allowed) -> Dict[str, Any]:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise SchemaError(path or "<root>", "expected an object")
    for key in value:
        if key not in allowed:
            raise SchemaError(f"{path}.{key}" if path else key, "unknown key")
    return value


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _optional_number(value: Any, path: str) -> Optional[float]:
    return None if value is None else _number(value, path)


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {type(value).__name__}")
    return value


def _boolean(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise SchemaError(path, f"expected true or false, got {type(value).__name__}")
    return value


def _choice(value: Any, path: str, choices) -> str:
    if not isinstance(value, str) or value not in choices:
        raise SchemaError(path, f"expected one of {', '.join(choices)}, got {value!r}")
    return value


def _physics(path: str, build):
    """Run a constructor, prefixing physics errors with the field path."""
    try:
        return build()
    except PhysicsDomainError as e:
        raise type(e)(f"{path}: {e}", e.diagnostics)
    except CPTrapError as e:
        raise SchemaError(path, str(e))


# =============================================================================
# Sections
# =============================================================================

def _parse_profile(doc: Any, path: str, i: int, alpha: int) -> FormFactor:
    doc = _section(doc, path, ("kind",) + tuple({k for keys in _PROFILE_KEYS.values() for k in keys}))
    kind = _choice(doc.get("kind", "gaussian"), f"{path}.kind", tuple(_PROFILE_KEYS))
    allowed = ("kind",) + _PROFILE_KEYS[kind]
    _section(doc, path, allowed)
    params = {k: _number(doc[k], f"{path}.{k}") for k in _PROFILE_KEYS[kind] if k in doc}
    if "halfwidth" in params:
        params["width"] = params.pop("halfwidth")
    return _physics(path, lambda: FormFactor(i, alpha, kind, **params))


def _parse_formfactors(doc: Any, path: str):
    if doc is None:
        doc = DEFAULT_PROFILE
    if isinstance(doc, dict):
        return tuple(
            tuple(_parse_profile(doc, path, i, a) for a in (1, 2)) for i in (1, 2)
        )
    if not (isinstance(doc, list) and len(doc) == 2 and all(isinstance(r, list) and len(r) == 2 for r in doc)):
        raise SchemaError(path, "expected one profile object or a 2x2 table [polarization][transition]")
    return tuple(
        tuple(_parse_profile(doc[i - 1][a - 1], f"{path}[{i - 1}][{a - 1}]", i, a) for a in (1, 2))
        for i in (1, 2)
    )


def _parse_occupation_one(doc: Any, path: str) -> OccupationSpectrum:
    doc = _section(doc, path, ("kind", "level", "beta", "inner", "outer"))
    kind = _choice(doc.get("kind", "planck"), f"{path}.kind", tuple(_OCCUPATION_KEYS))
    _section(doc, path, ("kind",) + _OCCUPATION_KEYS[kind])
    params = {k: _number(doc[k], f"{path}.{k}") for k in _OCCUPATION_KEYS[kind] if k in doc}
    return _physics(path, lambda: OccupationSpectrum(kind, **params))


def _parse_occupations(doc: Any, path: str):
    if doc is None:
        doc = DEFAULT_OCCUPATION
    if isinstance(doc, dict):
        one = _parse_occupation_one(doc, path)
        return one, one
    if not (isinstance(doc, list) and len(doc) == 2):
        raise SchemaError(path, "expected one occupation object or a list of two (per polarization)")
    return tuple(_parse_occupation_one(doc[i], f"{path}[{i}]") for i in (0, 1))


def _parse_numerics(doc: Any) -> Numerics:
    doc = _section(doc, "numerics", Numerics.__dataclass_fields__)
    d = Numerics()
    numerics = Numerics(
        dt=_optional_number(doc.get("dt", d.dt), "numerics.dt"),
        horizon=_number(doc.get("horizon", d.horizon), "numerics.horizon"),
        samples=_integer(doc.get("samples", d.samples), "numerics.samples"),
        quadrature_tolerance=_number(doc.get("quadrature_tolerance", d.quadrature_tolerance), "numerics.quadrature_tolerance"),
        panel_limit=_integer(doc.get("panel_limit", d.panel_limit), "numerics.panel_limit"),
        cutoff_factor=_number(doc.get("cutoff_factor", d.cutoff_factor), "numerics.cutoff_factor"),
        workers=_integer(doc.get("workers", d.workers), "numerics.workers"),
        require_oscillation=_boolean(doc.get("require_oscillation", d.require_oscillation), "numerics.require_oscillation"),
        exact=_boolean(doc.get("exact", d.exact), "numerics.exact"),
    )
    if numerics.dt is not None and not numerics.dt > 0:
        raise PhysicsDomainError(f"numerics.dt: step must be positive, got {numerics.dt}")
    if numerics.horizon < 0:
        raise PhysicsDomainError(f"numerics.horizon: must be >= 0, got {numerics.horizon}")
    if numerics.samples < 1:
        raise SchemaError("numerics.samples", "must be >= 1")
    if numerics.panel_limit < 1:
        raise SchemaError("numerics.panel_limit", "must be >= 1")
    if numerics.workers < 1:
        raise SchemaError("numerics.workers", "must be >= 1")
    return numerics


def _parse_bath(doc: Any, numerics: Numerics) -> BathConfig:
    doc = _section(doc, "bath", ("dispersion", "formfactors", "occupation", "bohr_frequency", "cutoff"))
    dispersion_doc = _section(doc.get("dispersion"), "bath.dispersion", ("p",))
    p = _number(dispersion_doc.get("p", 1.0), "bath.dispersion.p")
    dispersion = _physics("bath.dispersion", lambda: DispersionSpec(p))

    formfactors = _parse_formfactors(doc.get("formfactors"), "bath.formfactors")
    occupations = _parse_occupations(doc.get("occupation"), "bath.occupation")
    omega = _number(doc.get("bohr_frequency", 1.0), "bath.bohr_frequency")
    cutoff = _optional_number(doc.get("cutoff"), "bath.cutoff")

    return _physics("bath", lambda: BathConfig(
        formfactors=formfactors,
        occupations=occupations,
        dispersion=dispersion,
        bohr_frequency=omega,
        cutoff=cutoff,
        cutoff_factor=numerics.cutoff_factor,
        tolerance=numerics.quadrature_tolerance,
        panel_limit=numerics.panel_limit,
    ))


def parse_initial_state(doc: Any, path: str = "initial_state") -> Tuple[DensityMatrix3, str]:
    """Preset name or 9 real coordinates; the result must be a density matrix."""
    if doc is None:
        doc = "NC"
    if isinstance(doc, str):
        _choice(doc, path, PRESET_NAMES)
        return preset_state(doc), doc
    if not (isinstance(doc, list) and len(doc) == 9):
        raise SchemaError(path, "expected a preset name or a list of 9 real coordinates")
    coordinates = [_number(x, f"{path}[{k}]") for k, x in enumerate(doc)]
    state = DensityMatrix3.from_vector(coordinates)
    check = check_density(state)
    if not check.ok:
        raise PhysicsDomainError(
            f"{path}: not a density matrix ({', '.join(check.violations)})",
            {"min_eigenvalue": check.min_eigenvalue},
        )
    return state, "coordinates"


def _parse_sweep(doc: Any) -> Optional[SweepSpec]:
    if doc is None:
        return None
    doc = _section(doc, "sweep", ("parameter", "grid"))
    parameter = _choice(doc.get("parameter"), "sweep.parameter", SWEEP_PARAMETERS)
    grid = doc.get("grid")
    if not isinstance(grid, list) or not grid:
        raise SchemaError("sweep.grid", "expected a non-empty list of numbers")
    return SweepSpec(parameter, tuple(_number(x, f"sweep.grid[{k}]") for k, x in enumerate(grid)))


def _parse_family(doc: Any) -> FamilySpec:
    doc = _section(doc, "family", ("ratio", "points"))
    ratio = _optional_number(doc.get("ratio"), "family.ratio")
    points = _integer(doc.get("points", 11), "family.points")
    if ratio is not None and not (0.0 <= ratio <= 1.0):
        raise PhysicsDomainError(f"family.ratio: must lie in [0, 1], got {ratio}")
    if points < 2:
        raise SchemaError("family.points", "must be >= 2")
    return FamilySpec(ratio, points)


def _parse_output(doc: Any) -> OutputSpec:
    doc = _section(doc, "output", ("path", "format"))
    path = doc.get("path")
    if path is not None and not isinstance(path, str):
        raise SchemaError("output.path", "expected a string or null")
    return OutputSpec(path, _choice(doc.get("format", "csv"), "output.format", OUTPUT_FORMATS))


TOP_LEVEL_KEYS = ("schema_version", "bath", "initial_state", "numerics", "sweep", "family", "seed", "output")


def config_digest(document: Dict[str, Any]) -> str:
    canonical = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def parse_config(document: Union[Dict[str, Any], None]) -> RunConfig:
    """
    Validate a run document and apply defaults.

    Raises:
        SchemaError: unknown key, wrong type, unsupported schema_version
        PhysicsDomainError: physically invalid value
    """
    doc = _section(document, "", TOP_LEVEL_KEYS)
    version = _integer(doc.get("schema_version", SCHEMA_VERSION), "schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError("schema_version", f"unsupported version {version} (expected {SCHEMA_VERSION})")

    numerics = _parse_numerics(doc.get("numerics"))
    bath = _parse_bath(doc.get("bath"), numerics)
    state, label = parse_initial_state(doc.get("initial_state"))
    seed = _integer(doc.get("seed", 0), "seed")
    if seed < 0:
        raise SchemaError("seed", "must be an unsigned integer")

    config = RunConfig(
        bath=bath,
        initial_state=state,
        initial_state_label=label,
        numerics=numerics,
        sweep=_parse_sweep(doc.get("sweep")),
        family=_parse_family(doc.get("family")),
        seed=seed,
        output=_parse_output(doc.get("output")),
        digest=config_digest(doc),
    )
    logger.debug(f"Configuration parsed (digest {config.digest})")
    return config


def load_document(path: Optional[str]) -> Dict[str, Any]:
    """Read a JSON document; None gives the empty (all-defaults) document."""
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise SchemaError("<root>", f"invalid JSON in {path}: {e}")
    except OSError as e:
        raise SchemaError("<root>", f"cannot read {path}: {e}")
    return document


def load_config(path: Optional[str]) -> RunConfig:
    return parse_config(load_document(path))
