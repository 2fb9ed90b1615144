"""
Error hierarchy for the simulator.

Every simulation failure carries a stable slug ``code`` so that failed sweep
cells can be recorded and grouped without parsing messages.
"""


class ConfigError(ValueError):
    """Scenario or CLI configuration is unusable."""


class SimulationError(RuntimeError):
    code = "simulation_failed"

    def __init__(self, message: str = "") -> None:
        super().__init__(message or self.code)


class DegenerateChannelError(SimulationError):
    code = "degenerate_channel"


class CoincidentPositionError(SimulationError):
    code = "coincident_positions"


class FieldDomainError(SimulationError):
    code = "outside_fading_map"


class CollisionError(SimulationError):
    code = "collision"


class NullingViolationError(SimulationError):
    code = "nulling_violation"


class PlacementError(SimulationError):
    code = "placement_failed"


class GradientStepError(SimulationError):
    code = "gradient_step_failed"
