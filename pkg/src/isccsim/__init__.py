"""Multi-device ISCC sensing simulator and distributed resource optimizer."""

__version__ = "0.1.0"
