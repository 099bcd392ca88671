"""Desk-scale simulator and experiment orchestrator for a rural
wireless living lab: access links, x-haul and free-space optics,
protocol-stack delay, fountain-coded transport, lease/guard
orchestration, and site telemetry, all deterministic under a seed."""

__version__ = "0.1.0"
