import pytest

from probecast.dataset import (
    HEADER,
    Dataset,
    as_arrays,
    format_seconds,
    from_arrays,
    load,
    save,
    split_4of5,
)
from probecast.errors import ParseFailure
from probecast.profiler import ContentionVector, Sample


def sample(i, t_app=1.5):
    v = ContentionVector(c_cpu=10 + i, c_mem=20 + i, c_disk=30 + i,
                         window=3.0, taken_at=1_600_000_000.0 + i * 0.1234567891)
    return Sample(contention=v, t_app=t_app + i * 0.0000001, taken_at=v.taken_at)


class TestRoundTrip:
    def test_save_load_equal(self, tmp_path):
        ds = Dataset(tuple(sample(i) for i in range(7)))
        path = tmp_path / "d.csv"
        save(ds, path)
        assert load(path) == ds

    def test_empty_dataset(self, tmp_path):
        path = tmp_path / "empty.csv"
        save(Dataset(()), path)
        assert path.read_text() == HEADER + "\n"
        assert len(load(path)) == 0

    def test_awkward_floats_roundtrip(self, tmp_path):
        awkward = [0.1, 1 / 3, 2.0, 1e-4, 123456.789012345678, 0.30000000000000004]
        ds = Dataset(tuple(
            Sample(contention=ContentionVector(1, 2, 3, window=w, taken_at=w),
                   t_app=w, taken_at=w) for w in awkward))
        path = tmp_path / "f.csv"
        save(ds, path)
        back = load(path)
        for a, b in zip(ds, back):
            assert a.t_app == b.t_app and a.contention.window == b.contention.window

    def test_format_has_six_fraction_digits(self):
        assert format_seconds(2.0) == "2.000000"
        assert float(format_seconds(1 / 3)) == 1 / 3


class TestParsing:
    def test_nonpositive_t_app_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(HEADER + "\n1.0,3.0,1,2,3,0.0\n")
        with pytest.raises(ParseFailure) as err:
            load(path)
        assert err.value.row == 2

    def test_malformed_row_names_row_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(HEADER + "\n1.0,3.0,1,2,3,1.5\n1.0,3.0,oops,2,3,1.5\n")
        with pytest.raises(ParseFailure) as err:
            load(path)
        assert err.value.row == 3

    def test_wrong_field_count_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(HEADER + "\n1.0,3.0,1,2\n")
        with pytest.raises(ParseFailure):
            load(path)

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,3.0,1,2,3,1.5\n")
        with pytest.raises(ParseFailure):
            load(path)

    def test_negative_count_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(HEADER + "\n1.0,3.0,-1,2,3,1.5\n")
        with pytest.raises(ParseFailure):
            load(path)


class TestSplit:
    def test_n10(self):
        s = split_4of5(10)
        assert s.test_indices == (4, 9)
        assert s.train_indices == (0, 1, 2, 3, 5, 6, 7, 8)

    def test_n5(self):
        s = split_4of5(5)
        assert s.train_indices == (0, 1, 2, 3) and s.test_indices == (4,)

    def test_n3_tail_goes_to_train(self):
        s = split_4of5(3)
        assert s.train_indices == (0, 1, 2) and s.test_indices == ()

    @pytest.mark.parametrize("n", [0, 1, 4, 5, 9, 10, 23, 100, 1000])
    def test_partition_properties(self, n):
        s = split_4of5(n)
        assert len(s.test_indices) == n // 5
        combined = sorted(s.train_indices + s.test_indices)
        assert combined == list(range(n))
        assert set(s.train_indices).isdisjoint(s.test_indices)

    def test_deterministic_and_orderpreserving(self):
        ds = Dataset(tuple(sample(i) for i in range(12)))
        assert split_4of5(ds) == split_4of5(12)


def test_as_arrays_from_arrays():
    import numpy as np
    X = np.array([[1e9, 2e8, 3e4], [2e9, 3e8, 4e4]], dtype=float)
    y = np.array([10.0, 20.0])
    ds = from_arrays(X, y)
    X2, y2 = as_arrays(ds)
    assert (X2 == X).all() and (y2 == y).all()
    taken = [s.taken_at for s in ds]
    assert taken == sorted(taken)
