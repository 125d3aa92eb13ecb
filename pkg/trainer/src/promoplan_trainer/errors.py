"""Exception types mapped onto CLI exit codes."""


class TrainerError(Exception):
    """Base class for all trainer errors."""


class ConfigError(TrainerError):
    """Invalid or inconsistent configuration (CLI exit code 2)."""


class DataError(TrainerError):
    """Malformed or degenerate data (CLI exit code 3)."""


class TrainingDivergedError(TrainerError):
    """Loss became non-finite during optimization (CLI exit code 4).

    Carries enough context to reproduce: variant, epoch, step, and the
    last finite loss seen before the blow-up.
    """

    def __init__(self, variant: str, epoch: int, step: int, lr: float, last_loss: float):
        self.variant = variant
        self.epoch = epoch
        self.step = step
        self.lr = lr
        self.last_loss = last_loss
        super().__init__(
            f"training diverged: variant={variant} epoch={epoch} step={step} "
            f"lr={lr:g} last finite loss={last_loss:.6g}"
        )
