import itertools

import numpy as np
import pytest

from probecast.errors import EmptyInput, ZeroMeasured
from probecast.metrics import ErrorSummary, ape, ape_batch, report_csv, summarize


class TestApe:
    def test_direct(self):
        assert ape(100.0, 90.0) == pytest.approx(0.10, rel=1e-12)

    def test_identity(self):
        for x in (0.5, 1.0, 123.4):
            assert ape(x, x) == 0.0

    def test_zero_measured_rejected(self):
        with pytest.raises(ZeroMeasured):
            ape(0.0, 5.0)

    def test_batch_matches_scalar(self):
        m = np.array([1.0, 2.0, 4.0])
        p = np.array([1.1, 1.0, 5.0])
        batch = ape_batch(m, p)
        assert batch == pytest.approx([ape(a, b) for a, b in zip(m, p)])


class TestSummarize:
    def test_mean(self):
        assert summarize([0.1, 0.2, 0.3]).mean == pytest.approx(0.2)

    def test_nearest_rank_p95(self):
        # 20 values 0.00..0.19: ceil(0.95*20)-1 = 18 -> 0.18
        errors = [i / 100 for i in range(20)]
        assert summarize(errors).p95 == pytest.approx(0.18)

    def test_constant_list_std_zero(self):
        s = summarize([0.2, 0.2, 0.2])
        assert s.std == 0.0 and s.mean == pytest.approx(0.2)

    def test_p95_is_an_element(self):
        rng = np.random.default_rng(0)
        for n in (1, 2, 7, 50):
            errors = rng.uniform(0, 1, size=n)
            assert summarize(errors).p95 in errors

    def test_mean_between_min_and_max(self):
        rng = np.random.default_rng(1)
        errors = rng.uniform(0, 1, size=30)
        s = summarize(errors)
        assert errors.min() <= s.mean <= errors.max()

    def test_permutation_invariant(self):
        base = [0.3, 0.1, 0.5, 0.2]
        results = {summarize(list(p)) for p in itertools.permutations(base)}
        assert len(results) == 1

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            summarize([])


def test_report_csv():
    rows = [("ridge", ErrorSummary(mean=0.1, p95=0.25, std=0.05, count=20))]
    text = report_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0] == "model,mean,p95,std,count"
    assert lines[1] == "ridge,0.1,0.25,0.05,20"
