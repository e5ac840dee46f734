"""probecast: in-situ contention probing, execution-time prediction, and
contention-aware load-balancing simulation."""

__version__ = "0.1.0"

from .probes import ProbeConfig, ProbeKind, ProbeResult  # noqa: F401
from .profiler import ContentionVector, ProfileSettings, Sample, profile  # noqa: F401
from .dataset import Dataset, SplitResult, split_4of5  # noqa: F401
from .modelio import PredictiveModel, load_model, predict, save_model  # noqa: F401
