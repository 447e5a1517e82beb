"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented invariant.

    ``invariant`` is a short stable identifier (e.g. ``"sigma2_positive"``)
    so that reports and tests can tell violations apart without parsing the
    message.
    """

    def __init__(self, invariant: str, message: str):
        super().__init__(f"[{invariant}] {message}")
        self.invariant = invariant
        self.message = message


class NumericalError(ArithmeticError):
    """A simulation produced a non-finite value."""

    def __init__(self, step: int, trajectory: int, time: float):
        super().__init__(
            f"non-finite state at step {step} (forward time {time:.6g}), "
            f"trajectory {trajectory}"
        )
        self.step = step
        self.trajectory = trajectory
        self.time = time
