from typing import ClassVar, Literal

from pydantic import Field

from quicksim.models.base_model import Model


class ConflictReport(Model):
    record_fields: ClassVar[tuple[str, ...]] = (
        "pipeline",
        "problem",
        "metric",
        "writeback_store_conflicts",
        "ldmatrix_load_conflicts",
        "writeback_store_phases",
        "ldmatrix_load_phases",
        "total_phases",
    )

    pipeline: str = ""
    problem: str = ""
    metric: Literal["bank_sum", "wavefront"] = "bank_sum"
    writeback_store_conflicts: int = Field(0, ge=0)
    ldmatrix_load_conflicts: int = Field(0, ge=0)
    writeback_store_phases: int = Field(0, ge=0)
    ldmatrix_load_phases: int = Field(0, ge=0)

    @property
    def total_phases(self) -> int:
        return self.writeback_store_phases + self.ldmatrix_load_phases

    @property
    def total_conflicts(self) -> int:
        return self.writeback_store_conflicts + self.ldmatrix_load_conflicts
