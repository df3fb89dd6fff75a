"""Watermark-aware machine unlearning lab — Python surface over the C++ core."""

from _w4mu import (  # noqa: F401
    MetricsReport,
    ScenarioSpec,
    csv_header,
    load_checkpoint,
    parse_config,
    parse_config_text,
    reports_to_csv,
    run_scenario,
    run_scenario_to,
    save_checkpoint,
    sweep_lambda,
)

__all__ = [
    "MetricsReport",
    "ScenarioSpec",
    "csv_header",
    "load_checkpoint",
    "parse_config",
    "parse_config_text",
    "reports_to_csv",
    "run_scenario",
    "run_scenario_to",
    "save_checkpoint",
    "sweep_lambda",
]
