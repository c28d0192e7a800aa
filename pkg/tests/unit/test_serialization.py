"""
Unit tests for the encoded-dataset file format
"""

import numpy as np
import pytest
from fair_pprl.encoding import BloomFilter, read_encoded, sidecar_path, write_encoded
from fair_pprl.exceptions import DatasetNotFoundError, DimensionError, IntegrityError, SchemaError


class TestSerialization:
    """Test suite for write_encoded and read_encoded"""

    @pytest.fixture
    def filters(self):
        """Two originals and one dummy"""
        rng = np.random.default_rng(1)
        return [
            BloomFilter(bits=rng.random(20) < 0.5, group=1, source_entity_id="E1"),
            BloomFilter(bits=rng.random(20) < 0.5, group=2, source_entity_id="E2"),
            BloomFilter(bits=rng.random(20) < 0.5, group=2, is_dummy=True),
        ]

    def test_round_trip(self, filters, tmp_path):
        """Test filters, groups and provenance survive a round trip"""
        path = write_encoded(filters, tmp_path / "a.csv")
        assert read_encoded(path) == filters

    def test_layout(self, filters, tmp_path):
        """Test the header line and that ids stay in the sidecar"""
        path = write_encoded(filters, tmp_path / "a.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "# fair-pprl encoded v1 n_l=20"
        assert lines[1] == "bits_hex,group,is_dummy"
        assert "E1" not in path.read_text()
        assert sidecar_path(path).name == "a.private.csv"
        assert "E1" in sidecar_path(path).read_text()

    def test_empty_needs_length(self, tmp_path):
        """Test empty files need an explicit n_l"""
        with pytest.raises(DimensionError):
            write_encoded([], tmp_path / "e.csv")
        path = write_encoded([], tmp_path / "e.csv", n_l=20)
        assert read_encoded(path) == []

    def test_mixed_lengths_rejected(self, tmp_path):
        """Test filters of different lengths cannot share a file"""
        short = BloomFilter(bits=[1, 0], group=1, is_dummy=True)
        long = BloomFilter(bits=[1, 0, 1], group=1, is_dummy=True)
        with pytest.raises(DimensionError):
            write_encoded([short, long], tmp_path / "m.csv")

    def test_read_errors(self, filters, tmp_path):
        """Test missing files, wrong headers and sidecar mismatches"""
        with pytest.raises(DatasetNotFoundError):
            read_encoded(tmp_path / "missing.csv")
        bad = tmp_path / "bad.csv"
        bad.write_text("bits_hex,group,is_dummy\n")
        with pytest.raises(SchemaError):
            read_encoded(bad)

        path = write_encoded(filters, tmp_path / "a.csv")
        sidecar_path(path).write_text("row,source_entity_id\n0,E1\n")
        with pytest.raises(IntegrityError):
            read_encoded(path)
        sidecar_path(path).unlink()
        with pytest.raises(DatasetNotFoundError):
            read_encoded(path)
