"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """A call received a value outside its documented domain."""


class InvalidConfiguration(ValueError):
    """A world or experiment cannot be assembled as configured."""


class InvalidDescription(ValueError):
    """A robot description violates its structural invariants."""


class DecodeFailure(ValueError):
    """A genotype decodes to no usable robot."""


class SimulationDiverged(RuntimeError):
    """Non-finite state detected while stepping."""

    def __init__(self, body_index: int, time: float):
        super().__init__(f"simulation diverged at t={time:.6g}s (body {body_index})")
        self.body_index = body_index
        self.time = time
