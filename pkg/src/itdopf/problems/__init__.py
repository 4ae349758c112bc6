"""OPFITD / PFITD assembly, the independent baseline, comparisons and sweeps."""

from .case import ITDCase, attach_feeders, bundled_case, bundled_paths, clone_feeder, load_case
from .compare import ComparisonRow, ComparisonTable, RunMetrics, compare
from .independent import FeederSolve, IndependentResult, solve_independent
from .opfitd import (
    ITDResult,
    ItdModel,
    Setpoints,
    build_opfitd,
    build_pfitd,
    setpoints_from_result,
    solve_opfitd,
    solve_pfitd,
    verify_kkt,
)
from .sweep import SweepReport, SweepRow, scale_sweep

__all__ = [
    "ComparisonRow",
    "ComparisonTable",
    "FeederSolve",
    "ITDCase",
    "ITDResult",
    "IndependentResult",
    "ItdModel",
    "RunMetrics",
    "Setpoints",
    "SweepReport",
    "SweepRow",
    "attach_feeders",
    "build_opfitd",
    "build_pfitd",
    "bundled_case",
    "bundled_paths",
    "clone_feeder",
    "compare",
    "load_case",
    "scale_sweep",
    "setpoints_from_result",
    "solve_independent",
    "solve_opfitd",
    "solve_pfitd",
    "verify_kkt",
]
