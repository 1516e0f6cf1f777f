class SimulationBlowUpError(ValueError):
    def __init__(self, step, object_id=""):
        self.step = step
        self.object_id = object_id
        super().__init__(f"non-finite state at step {step} simulating {object_id or 'object'}")


class EmbeddingFileError(ValueError):
    def __init__(self, message, row=None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


class UnknownObjectError(ValueError):
    pass


class NotFittedError(RuntimeError):
    pass
