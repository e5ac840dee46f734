"""Exception types raised across the package."""


class ProbecastError(Exception):
    """Base class for all probecast errors."""


# --- probe / profiler errors ---------------------------------------------

class InvalidDuration(ProbecastError, ValueError):
    pass


class InvalidProbeConfig(ProbecastError, ValueError):
    pass


class UnevenPartition(InvalidProbeConfig):
    """More workers than partitionable slots."""


class WorkerSpawnFailure(ProbecastError):
    pass


class AllocationFailure(ProbecastError):
    pass


class DirectIoUnsupported(ProbecastError):
    """The filesystem refused cache-bypassing reads; failing loudly is
    required because a cached read would not measure the disk at all."""


class FileCreationFailure(ProbecastError):
    pass


class ProbeBusy(ProbecastError):
    """A probe was started while another probe was running in this process."""


class TargetLaunchFailure(ProbecastError):
    pass


class TargetNonZeroExit(ProbecastError):
    def __init__(self, returncode, stderr_tail=""):
        super().__init__(f"target exited with status {returncode}")
        self.returncode = returncode
        self.stderr_tail = stderr_tail


# --- dataset / persistence errors ----------------------------------------

class StorageFailure(ProbecastError):
    pass


class IoFailure(ProbecastError):
    pass


class ParseFailure(ProbecastError):
    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class VersionMismatch(ProbecastError):
    pass


# --- modeling errors -------------------------------------------------------

class EmptyInput(ProbecastError, ValueError):
    pass


class InsufficientData(ProbecastError, ValueError):
    pass


class NonFiniteInput(ProbecastError, ValueError):
    pass


class NonFiniteLoss(ProbecastError):
    pass


class NonFiniteOutput(ProbecastError):
    pass


class InvalidNNConfig(ProbecastError, ValueError):
    pass


class DegenerateGram(ProbecastError):
    pass


class ZeroMeasured(ProbecastError, ValueError):
    pass


# --- synthetic lab / balancer errors --------------------------------------

class NonPositiveTarget(ProbecastError):
    pass


class SpawnFailure(ProbecastError):
    pass


class InvalidWorkUnits(ProbecastError, ValueError):
    pass


class HorizonExceeded(ProbecastError):
    pass
