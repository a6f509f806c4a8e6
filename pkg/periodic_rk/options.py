from dataclasses import dataclass

from .kernel import FourthOrderCondition, KernelConvention, resolve_convention

CONVERGED_PASSES = 200


@dataclass(frozen=True)
class SolverOptions:
    kernel_condition: FourthOrderCondition | None = None  # None: try every variant
    picard_passes: int = 1
    picard_tolerance: float = 1e-10
    gram_tolerance: float = 1e-7

    def __post_init__(self) -> None:
        if self.picard_passes < 1:
            raise ValueError(f"picard_passes must be at least 1, got {self.picard_passes}")

    @classmethod
    def converged(cls, kernel_condition: FourthOrderCondition | None = None) -> "SolverOptions":
        """Picard repetition until the node values stop changing; error tables use this."""
        return cls(kernel_condition=kernel_condition, picard_passes=CONVERGED_PASSES)

    def convention(self) -> KernelConvention:
        return resolve_convention(self.kernel_condition)
