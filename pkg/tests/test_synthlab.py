import threading
import time

import numpy as np
import pytest

from probecast.dataset import as_arrays, load, save, split_4of5
from probecast.errors import InvalidWorkUnits
from probecast.linear import LinearHyperparameters, train_linear
from probecast.synthlab import (
    LoadSpec,
    SynthSpec,
    default_exp_spec,
    default_poly2_spec,
    gen_synth_dataset,
    run_target_kernel,
    start_load,
    stop_load,
)

from oracles import poly2_coefficients_in_basis, synth_basis

MIB = 1 << 20


class TestSynthSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            default_poly2_spec(n=0)
        with pytest.raises(ValueError):
            SynthSpec(form="cubic", coefficients=(1.0,) * 10, noise_sigma=0.0,
                      n=10, counter_ranges=((0, 1),) * 3)
        with pytest.raises(ValueError):
            SynthSpec(form="poly2", coefficients=(1.0,) * 4, noise_sigma=0.0,
                      n=10, counter_ranges=((0, 1),) * 3)

    def test_zero_noise_matches_ground_truth_exactly(self):
        spec = default_poly2_spec(n=50, noise_sigma=0.0)
        ds = gen_synth_dataset(spec)
        for s in ds:
            truth = spec.ground_truth(s.contention.as_tuple())
            assert abs(s.t_app - truth) <= 1e-12 * truth

    def test_determinism(self):
        a = gen_synth_dataset(default_poly2_spec(n=30, seed=5))
        b = gen_synth_dataset(default_poly2_spec(n=30, seed=5))
        assert a == b

    def test_datasets_roundtrip_through_store(self, tmp_path):
        ds = gen_synth_dataset(default_exp_spec(n=25, seed=2))
        path = tmp_path / "synth.csv"
        save(ds, path)
        assert load(path) == ds

    def test_ridge_recovers_coefficients_in_standardized_space(self):
        spec = default_poly2_spec(n=800, noise_sigma=0.0, seed=3)
        ds = gen_synth_dataset(spec)
        X, y = as_arrays(ds)
        model = train_linear("ridge", X, y, LinearHyperparameters(alpha=1e-8))
        mids, scales = synth_basis(spec)
        recovered = poly2_coefficients_in_basis(model, mids, scales)
        assert np.abs(recovered - np.array(spec.coefficients)).max() < 1e-3

    def test_exp_form_positive(self):
        ds = gen_synth_dataset(default_exp_spec(n=100, seed=4))
        _, y = as_arrays(ds)
        assert (y > 0).all()


class TestInjectors:
    def test_lifecycle_returns_to_baseline(self):
        before = threading.active_count()
        h = start_load(LoadSpec(kind="cpu_hog", intensity=2))
        time.sleep(0.2)
        assert threading.active_count() == before + 2
        stop_load(h)
        assert threading.active_count() == before

    def test_stop_idempotent(self):
        h = start_load(LoadSpec(kind="cpu_hog", intensity=1))
        h.stop()
        h.stop()  # double stop is a no-op

    def test_duration_self_stops(self):
        h = start_load(LoadSpec(kind="cpu_hog", intensity=1, duration=0.2))
        time.sleep(0.5)
        h.stop()

    def test_context_manager(self):
        before = threading.active_count()
        with start_load(LoadSpec(kind="cpu_hog", intensity=1)):
            time.sleep(0.1)
        assert threading.active_count() == before

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            LoadSpec(kind="cpu_hog", intensity=0)
        with pytest.raises(ValueError):
            LoadSpec(kind="gpu_hog", intensity=1)


class TestTargetKernel:
    def test_zero_units_rejected(self):
        with pytest.raises(InvalidWorkUnits):
            run_target_kernel(0)

    def test_elapsed_positive_and_grows(self, tmp_path):
        path = str(tmp_path / "k.bin")
        one = run_target_kernel(1, array_bytes=16 * MIB, path=path)
        three = run_target_kernel(3, array_bytes=16 * MIB, path=path)
        assert one > 0 and three > one

    def test_linearity_on_idle_host(self, tmp_path):
        path = str(tmp_path / "k.bin")
        run_target_kernel(1, array_bytes=16 * MIB, path=path)  # warm caches
        k = min(run_target_kernel(2, array_bytes=16 * MIB, path=path) for _ in range(3))
        k2 = min(run_target_kernel(4, array_bytes=16 * MIB, path=path) for _ in range(3))
        assert 1.7 <= k2 / k <= 2.3
