"""Configuration-driven command-line surface for scenario runs."""

from .scenario import ScenarioConfig, load_scenario, parse_expression

__all__ = ["ScenarioConfig", "load_scenario", "parse_expression"]
