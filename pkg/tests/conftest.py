import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from probecast import kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile/load every numba kernel once so no test times JIT latency
    kernels.warmup()
    import numpy as np
    from probecast.linear import train_linear
    from probecast.svr import train_svr
    rng = np.random.default_rng(0)
    X = rng.uniform(1, 9, size=(12, 3))
    y = 1.0 + X[:, 0]
    train_linear("elasticnet", X, y)
    train_linear("sgd", X, y)
    train_svr(X, y, max_passes=50)
