"""Run configuration, CLI, sweeps, verification suites and file output."""

from .config import ProblemSetup, RunConfig, build_problem, parse_config, serialize_config
from .sweep import SweepSpec, run_sweep
from .suites import SUITES, SuiteCheck, SuiteResult, format_suite, run_suite

__all__ = [
    "ProblemSetup", "RunConfig", "build_problem", "parse_config",
    "serialize_config", "SweepSpec", "run_sweep", "SUITES", "SuiteCheck",
    "SuiteResult", "format_suite", "run_suite",
]
