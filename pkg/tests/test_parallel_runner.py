"""Tests for ordered process-pool execution."""

import pytest

from src.parallel_runner import ParallelRunner, chunk_ranges, flatten


class TestParallelRunner:
    """Test ordered map."""

    def test_sequential_map(self):
        assert ParallelRunner(1).map(abs, [-1, 2, -3]) == [1, 2, 3]

    def test_pool_map_keeps_order(self):
        tasks = [(2, k) for k in range(10)]
        assert ParallelRunner(4).map(pow, tasks, star=True) == [2 ** k for k in range(10)]

    def test_threads_clamped(self):
        assert ParallelRunner(0).threads == 1

    def test_first_failure_is_raised(self, caplog):
        runner = ParallelRunner(2, label="powers")
        with pytest.raises(ZeroDivisionError):
            runner.map(pow, [(2, 1), (0, -1), ("x", 2)], star=True)
        assert "2 of 3 powers failed; first failure at task 1" in caplog.text


class TestHelpers:
    """Test chunking helpers."""

    def test_chunk_ranges(self):
        assert chunk_ranges(5, 2) == [(0, 2), (2, 4), (4, 5)]
        assert chunk_ranges(0, 3) == []
        assert chunk_ranges(3, 0) == [(0, 1), (1, 2), (2, 3)]

    def test_flatten(self):
        assert flatten([[1, 2], [], [3]]) == [1, 2, 3]
