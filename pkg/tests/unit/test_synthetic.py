"""
Unit tests for the synthetic dataset generator
"""

import pytest
from fair_pprl.exceptions import ConfigurationError, DomainError, EmptyInputError
from fair_pprl.records import CorruptionConfig, generate_synthetic, load_word_pool, synthetic_schema
from fair_pprl.records.synthetic import SYNTHETIC_QIDS, group_quotas


class TestSynthetic:
    """Test suite for generate_synthetic"""

    @pytest.fixture
    def generated(self):
        """200 records per party, 30% overlap, uneven groups"""
        return generate_synthetic(200, 0.3, [0.7, 0.3], seed=4)

    def test_sizes_and_overlap(self, generated):
        """Test party sizes and the number of shared entities"""
        dataset_a, dataset_b, truth = generated
        assert len(dataset_a) == len(dataset_b) == 200
        assert len(truth) == 60
        assert {a for a, _ in truth.matches} <= dataset_a.ids
        assert {b for _, b in truth.matches} <= dataset_b.ids

    def test_exact_group_sizes(self, generated):
        """Test both parties hold exactly the quota per group"""
        dataset_a, dataset_b, _ = generated
        assert dataset_a.group_sizes() == {1: 140, 2: 60}
        assert dataset_b.group_sizes() == {1: 140, 2: 60}

    def test_shared_entities_keep_group(self, generated):
        """Test a shared entity has the same group on both sides"""
        dataset_a, dataset_b, truth = generated
        for id_a, id_b in truth.matches:
            assert dataset_a.by_id[id_a].group == dataset_b.by_id[id_b].group
            assert dataset_a.by_id[id_a].values == dataset_b.by_id[id_b].values

    def test_deterministic(self):
        """Test the same seed reproduces the datasets"""
        first = generate_synthetic(50, 0.5, [0.5, 0.5], seed=8)
        second = generate_synthetic(50, 0.5, [0.5, 0.5], seed=8)
        assert first[0].records == second[0].records
        assert first[1].records == second[1].records
        assert first[2] == second[2]

    def test_corruption_changes_party_b_only(self):
        """Test corruption applies to party B's shared copies"""
        dataset_a, dataset_b, truth = generate_synthetic(
            100, 1.0, [0.5, 0.5], seed=2, corruption=CorruptionConfig(corruption_rate=1.0),
        )
        differing = sum(
            dataset_a.by_id[a].values != dataset_b.by_id[b].values for a, b in truth.matches
        )
        assert differing == 100

    def test_schema_and_pools(self, generated):
        """Test the synthetic schema and bundled word pools"""
        dataset_a, _, _ = generated
        assert dataset_a.schema == synthetic_schema(("g1", "g2"))
        assert dataset_a.schema.qid_columns == SYNTHETIC_QIDS
        pool = load_word_pool("surnames")
        assert len(pool) > 50
        assert list(pool) == sorted(set(pool))
        with pytest.raises(ConfigurationError):
            load_word_pool("nonexistent")

    def test_group_quotas(self):
        """Test largest-remainder quotas"""
        assert group_quotas(10, [1 / 3, 1 / 3, 1 / 3]) == [4, 3, 3]
        assert sum(group_quotas(7, [0.2, 0.5, 0.3])) == 7

    def test_invalid_arguments(self):
        """Test validation of counts, overlap and proportions"""
        with pytest.raises(EmptyInputError):
            generate_synthetic(0, 0.5, [1.0], seed=0)
        with pytest.raises(DomainError):
            generate_synthetic(10, 1.5, [1.0], seed=0)
        with pytest.raises(DomainError):
            generate_synthetic(10, 0.5, [0.6, 0.6], seed=0)
        with pytest.raises(ConfigurationError):
            generate_synthetic(10, 0.5, [0.5, 0.5], seed=0, group_labels=["only"])
