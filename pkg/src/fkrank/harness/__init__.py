"""Instance generators, property suites and the command-line front end."""

from .generators import FAMILIES, generate, generate_form
from .suite import SUITES, Report, SuiteConfig, run_suite

__all__ = ["FAMILIES", "generate", "generate_form", "SUITES", "Report", "SuiteConfig", "run_suite"]
