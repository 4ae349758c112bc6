"""Integrated transmission-distribution optimal power flow."""

__version__ = "0.1.0"
