from .cli import main
from .engine import run_audit
from .loaders import Study, load_benchmark, load_inputs, load_study, load_study_with_benchmark
from .report import AuditReport, parse_machine, render_report
from .simreport import render_simulation, simulation_to_dict

__all__ = [
    "AuditReport", "Study", "load_benchmark", "load_inputs", "load_study", "load_study_with_benchmark",
    "main", "parse_machine", "render_report", "render_simulation", "run_audit", "simulation_to_dict",
]
