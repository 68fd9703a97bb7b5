"""Indicator detection: rule configuration, URL classes and the scanning engine."""

from malind.rules.config import ConfigError, RuleConfig, default_rule_config, load_rule_config
from malind.rules.engine import scan_corpus, scan_file, scan_package
from malind.rules.model import Confidence, Finding, Hit, PackageReport
from malind.rules.urls import UrlClass, classify_url

__all__ = [
    "ConfigError",
    "Confidence",
    "Finding",
    "Hit",
    "PackageReport",
    "RuleConfig",
    "UrlClass",
    "classify_url",
    "default_rule_config",
    "load_rule_config",
    "scan_corpus",
    "scan_file",
    "scan_package",
]
