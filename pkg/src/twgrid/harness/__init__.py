"""Scenario loading, seeded trial execution, metrics and rendering."""

from .metrics import Outcome, TrialMetrics, turning_angle_histogram
from .render import render_svg
from .runner import BatchReport, TrialRecord, run_batch, run_trial, simulate_trial
from .scenario import Scenario, load

__all__ = ["BatchReport", "Outcome", "Scenario", "TrialMetrics", "TrialRecord", "load", "render_svg", "run_batch",
           "run_trial", "simulate_trial", "turning_angle_histogram"]
