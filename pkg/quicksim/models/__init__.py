# flake8: noqa
# import models into model package
from quicksim.models.cost import (
    BatchPoint,
    CostReport,
    DramTraffic,
    GemmProblem,
    HardwareProfile,
    Occupancy,
    TileConfig,
    TradeoffReport,
)
from quicksim.models.reports import ConflictReport
from quicksim.models.schedule import BaselineSmemLayout, KernelSchedule
