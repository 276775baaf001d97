"""Interval, affine and functional-boundary arithmetic with directed rounding."""

__version__ = "0.1.0"
