"""Spin detection from collar-worn triaxial accelerometer logs."""

__version__ = "0.1.0"
