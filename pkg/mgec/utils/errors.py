class MgecError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(MgecError, ValueError):
    """A spec, config or argument is invalid. The message names the offending field."""


class DatasetParseError(MgecError, ValueError):

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class TrainingAbort(MgecError, RuntimeError):
    """Training hit a non-finite loss.

    Parameters
    ----------
    epoch : int
        Epoch index where the abort happened
    batch : int
        Batch index inside the epoch
    checkpoint : ModelPair or None
        Last parameters that produced finite losses
    """

    def __init__(self, message, epoch, batch, checkpoint=None):
        self.epoch = epoch
        self.batch = batch
        self.checkpoint = checkpoint
        super().__init__(f"{message} (epoch {epoch}, batch {batch})")
