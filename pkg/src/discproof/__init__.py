"""Interval-arithmetic verification of density bounds for binary disc packings."""

__version__ = "0.1.0"
