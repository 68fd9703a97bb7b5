from .core import peaks, zero_crossings

__all__ = ["peaks", "zero_crossings"]
