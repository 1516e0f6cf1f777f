class ShapeError(ValueError):
    """Operand shapes are incompatible with the requested operation."""

    def __init__(self, op, *shapes):
        self.op = op
        self.shapes = tuple(tuple(shape) for shape in shapes)
        rendered = " and ".join(str(shape) for shape in self.shapes)
        super().__init__(f"{op}: incompatible shapes {rendered}")


class NonFiniteError(ValueError):
    pass


class GradientMissingError(RuntimeError):
    pass


class NotTrainedError(RuntimeError):
    pass


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch, batch, last_finite_loss):
        self.epoch = epoch
        self.batch = batch
        self.last_finite_loss = last_finite_loss
        super().__init__(
            f"loss became non-finite at epoch {epoch}, batch {batch} "
            f"(last finite loss: {last_finite_loss})"
        )


class RankDeficientError(ValueError):
    def __init__(self, condition_number, axis=""):
        self.condition_number = condition_number
        self.axis = axis
        super().__init__(
            f"design matrix{' for axis ' + axis if axis else ''} is "
            f"rank deficient (condition number {condition_number:.3e})"
        )
