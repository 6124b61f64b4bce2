"""
Tests for configuration loading, validation and hashing.
"""

import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest
import yaml

from ..config import ExperimentConfig, SamplingSpec
from ..exceptions import InvalidInputError
from ..utils import (
    OUTPUT_ROOT_ENV,
    config_hash,
    default_output_root,
    load_config,
    log_grid,
    parse_seed_list,
    seed_streams,
    sign_changes,
)


class TestExperimentConfig:
    """Dataclass tree built from YAML."""

    @pytest.fixture
    def temp_dir(self):
        """Temporary directory for config files."""
        temp_dir = Path(tempfile.mkdtemp())
        yield temp_dir
        shutil.rmtree(temp_dir, ignore_errors=True)

    def test_defaults_are_valid(self):
        assert ExperimentConfig().validate() == []

    def test_from_file(self, temp_dir):
        path = temp_dir / "config.yaml"
        path.write_text(yaml.safe_dump({
            'generator': {'kind': 'band', 'n': 40, 'w': 6},
            'sampling': {'alpha': 2.5, 'seeds': [3, 4]},
            'scan': {'points': 11},
        }))
        config = ExperimentConfig.from_file(str(path))
        assert config.generator.kind == "band"
        assert config.generator.w == 6
        assert config.sampling.seeds == [3, 4]
        assert config.scan.points == 11
        assert config.scan.gamma_max == 1e3
        assert config.validate() == []

    def test_unknown_keys_ignored(self, caplog):
        config = ExperimentConfig.from_dict({'scan': {'points': 5, 'colour': 'red'}, 'extra': {}})
        assert config.scan.points == 5
        assert "colour" in caplog.text
        assert "extra" in caplog.text

    def test_validation_errors(self):
        config = ExperimentConfig.from_dict({
            'generator': {'kind': 'wishart'},
            'sampling': {'seeds': []},
            'scan': {'gamma_min': 10.0, 'gamma_max': 1.0, 'penalty': 'l0'},
            'outputs': {'formats': ['csv', 'pdf']},
        })
        errors = config.validate()
        assert len(errors) == 5
        assert any("generator.kind" in e for e in errors)
        assert any("pdf" in e for e in errors)

    def test_band_width_checked(self):
        errors = ExperimentConfig.from_dict({'generator': {'kind': 'band', 'n': 10, 'w': 10}}).validate()
        assert any("generator.w" in e for e in errors)

    def test_hash_stable_and_distinct(self):
        first = ExperimentConfig.from_dict({'scan': {'points': 7}})
        second = ExperimentConfig.from_dict({'scan': {'points': 7}})
        third = ExperimentConfig.from_dict({'scan': {'points': 8}})
        assert first.config_hash() == second.config_hash()
        assert first.config_hash() != third.config_hash()
        assert len(first.config_hash()) == 16

    def test_round_trip_through_dict(self):
        config = ExperimentConfig.from_dict({'potts': {'n': 6, 'q': 3}})
        assert ExperimentConfig.from_dict(config.to_dict()) == config

    def test_sample_count(self):
        assert SamplingSpec(alpha=2.5).sample_count(10) == 25
        assert SamplingSpec(alpha=0.01).sample_count(10) == 1
        assert SamplingSpec(p=7).sample_count(100) == 7
        assert SamplingSpec().rescale_trace

    def test_gamma_h(self):
        config = ExperimentConfig.from_dict({'potts': {'n': 20, 'gamma_h_ratio': 0.1}})
        assert config.potts.gamma_h(2.0) == pytest.approx(0.01)


class TestUtils:
    """Helpers shared across modules."""

    def test_missing_config(self):
        with pytest.raises(FileNotFoundError):
            load_config("/nonexistent/config.yaml")

    def test_empty_config(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert load_config(str(path)) == {}

    def test_config_hash_ignores_key_order(self):
        assert config_hash({'a': 1, 'b': 2}) == config_hash({'b': 2, 'a': 1})

    def test_output_root_from_environment(self, monkeypatch, tmp_path):
        monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path))
        assert default_output_root() == tmp_path
        monkeypatch.delenv(OUTPUT_ROOT_ENV)
        assert default_output_root() == Path("results")

    def test_parse_seed_list(self):
        assert parse_seed_list("0, 1,2") == [0, 1, 2]
        with pytest.raises(InvalidInputError):
            parse_seed_list("1,x")
        with pytest.raises(InvalidInputError):
            parse_seed_list(" , ")

    def test_seed_streams_reproducible_and_independent(self):
        first, second = seed_streams(9), seed_streams(9)
        assert first['samples'].random() == second['samples'].random()
        assert first['couplings'].random() != first['ais'].random()

    def test_log_grid(self):
        grid = log_grid(1e-2, 1e2, 5)
        assert np.allclose(grid, [1e-2, 1e-1, 1.0, 10.0, 100.0])
        with pytest.raises(InvalidInputError):
            log_grid(0.0, 1.0, 5)

    def test_sign_changes(self):
        values = [3.0, 1.0, -1.0, -2.0, 2.0, np.nan, -1.0]
        assert sign_changes(values, "down") == [1]
        assert sign_changes(values, "up") == [3]
        assert sign_changes(values, "any") == [1, 3]
