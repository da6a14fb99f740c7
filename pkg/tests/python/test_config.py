"""
CPTrap - Run Configuration Unit Tests

Tests the JSON run document parser for:
- Defaults of the empty document
- Schema errors naming the offending field
- Physics-domain errors on impossible values
- The CPTRAP_OUTPUT_DIR override
"""

import json
import os

import numpy as np
import pytest

from cptrap.config import (
    SCHEMA_VERSION,
    OutputSpec,
    config_digest,
    load_config,
    load_document,
    parse_config,
    parse_initial_state,
)
from cptrap.errors import PhysicsDomainError, SchemaError
from cptrap.stationary import preset_state


# =============================================================================
# Fixtures
# =============================================================================

@pytest.fixture
def document():
    return {
        "schema_version": 1,
        "bath": {
            "formfactors": {"kind": "lorentzian", "amplitude": 1.2, "center": 0.9, "halfwidth": 0.4},
            "occupation": {"kind": "flat", "level": 2.0},
            "bohr_frequency": 1.5,
        },
        "initial_state": "mixed",
        "numerics": {"horizon": 4.0, "samples": 8, "exact": True},
        "family": {"ratio": 0.5, "points": 7},
        "sweep": {"parameter": "N", "grid": [0, 1, 10]},
        "seed": 42,
        "output": {"path": "run.csv", "format": "csv"},
    }


# =============================================================================
# Defaults
# =============================================================================

class TestDefaults:

    def test_empty_document_is_complete(self):
        config = parse_config({})
        assert config.bath.occupation(1).kind == "planck"
        assert config.bath.occupation(1).beta == 1.0
        assert config.bath.bohr_frequency == 1.0
        assert config.bath.formfactor(2, 1).kind == "gaussian"
        assert config.initial_state_label == "NC"
        assert np.array_equal(config.initial_state.matrix, preset_state("NC").matrix)
        assert config.sweep is None
        assert config.seed == 0
        assert config.output.path is None

    def test_none_is_the_empty_document(self):
        assert parse_config(None).digest == parse_config({}).digest

    def test_load_without_path(self):
        assert load_document(None) == {}

    def test_shipped_defaults_file(self):
        path = os.path.join(os.path.dirname(__file__), "..", "..", "config", "default_run.json")
        config, empty = load_config(path), parse_config({})
        assert config.numerics == empty.numerics
        assert config.family == empty.family
        assert config.output == empty.output
        assert config.sweep is None
        assert config.initial_state_label == "NC"
        assert config.bath.occupation(1) == empty.bath.occupation(1)
        assert config.bath.formfactor(2, 2) == empty.bath.formfactor(2, 2)


# =============================================================================
# Full documents
# =============================================================================

class TestDocument:

    def test_fields_are_applied(self, document):
        config = parse_config(document)
        assert config.bath.formfactor(1, 2).kind == "lorentzian"
        assert config.bath.formfactor(1, 2).width == 0.4
        assert config.bath.occupation(2).level == 2.0
        assert config.bath.bohr_frequency == 1.5
        assert config.initial_state_label == "mixed"
        assert config.numerics.exact is True
        assert config.family.points == 7
        assert config.sweep.grid == (0.0, 1.0, 10.0)
        assert config.seed == 42

    def test_coordinates_as_initial_state(self):
        state, label = parse_initial_state([0.5, 0.5, 0, 0, 0, 0, 0, 0, 0])
        assert label == "coordinates"
        assert state.populations == (0.5, 0.5, 0.0)

    def test_per_polarization_occupations(self):
        config = parse_config({"bath": {"occupation": [{"kind": "fock"}, {"kind": "flat", "level": 1.0}]}})
        assert config.bath.occupation(1).kind == "fock"
        assert config.bath.occupation(2).kind == "flat"

    def test_digest_is_stable(self, document):
        assert config_digest(document) == config_digest(json.loads(json.dumps(document)))
        assert parse_config(document).digest != parse_config({}).digest

    def test_load_from_file(self, document, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps(document))
        assert load_config(str(path)).seed == 42


# =============================================================================
# Schema errors (exit code 2)
# =============================================================================

class TestSchemaErrors:

    def test_unknown_top_level_key(self):
        with pytest.raises(SchemaError) as exc:
            parse_config({"tempp": 300})
        assert exc.value.exit_code == 2
        assert exc.value.path == "tempp"
        assert "tempp" in str(exc.value)

    def test_unknown_nested_key(self):
        with pytest.raises(SchemaError) as exc:
            parse_config({"numerics": {"stepsize": 0.1}})
        assert exc.value.path == "numerics.stepsize"

    def test_parameter_of_another_profile(self):
        with pytest.raises(SchemaError) as exc:
            parse_config({"bath": {"formfactors": {"kind": "shell", "width": 1.0}}})
        assert exc.value.path == "bath.formfactors.width"

    def test_wrong_type(self):
        with pytest.raises(SchemaError) as exc:
            parse_config({"numerics": {"samples": "many"}})
        assert exc.value.path == "numerics.samples"

    def test_unsupported_version(self):
        with pytest.raises(SchemaError):
            parse_config({"schema_version": SCHEMA_VERSION + 1})

    def test_unknown_preset(self):
        with pytest.raises(SchemaError):
            parse_config({"initial_state": "bright"})

    def test_unknown_sweep_parameter(self):
        with pytest.raises(SchemaError):
            parse_config({"sweep": {"parameter": "temperature", "grid": [1]}})

    def test_invalid_json_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{")
        with pytest.raises(SchemaError):
            load_document(str(path))


# =============================================================================
# Physics errors (exit code 3)
# =============================================================================

class TestPhysicsErrors:

    def test_negative_occupation(self):
        with pytest.raises(PhysicsDomainError) as exc:
            parse_config({"bath": {"occupation": {"kind": "flat", "level": -1.0}}})
        assert exc.value.exit_code == 3
        assert "bath.occupation" in str(exc.value)

    def test_nonpositive_frequency(self):
        with pytest.raises(PhysicsDomainError):
            parse_config({"bath": {"bohr_frequency": 0.0}})

    def test_cutoff_inside_resonant_sphere(self):
        with pytest.raises(PhysicsDomainError):
            parse_config({"bath": {"cutoff": 0.5}})

    def test_initial_state_not_positive(self):
        with pytest.raises(PhysicsDomainError):
            parse_config({"initial_state": [0.5, 0.5, 0, 0.9, 0, 0, 0, 0, 0]})

    def test_family_ratio_out_of_range(self):
        with pytest.raises(PhysicsDomainError):
            parse_config({"family": {"ratio": 2.0}})


# =============================================================================
# Output directory
# =============================================================================

class TestOutputPath:

    def test_relative_path_is_anchored(self, monkeypatch, tmp_path):
        monkeypatch.setenv("CPTRAP_OUTPUT_DIR", str(tmp_path))
        assert OutputSpec("run.csv").resolved_path() == str(tmp_path / "run.csv")

    def test_absolute_path_is_kept(self, monkeypatch, tmp_path):
        monkeypatch.setenv("CPTRAP_OUTPUT_DIR", "/elsewhere")
        target = str(tmp_path / "run.csv")
        assert OutputSpec(target).resolved_path() == target

    def test_no_path_means_stdout(self):
        assert OutputSpec().resolved_path() is None


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
