"""Predictive waste-collection planning: forecast fill levels, select
containers, route a heterogeneous fleet, serve plans over HTTP."""

__version__ = "0.1.0"
