"""
vacuumprobe - numerical models for probing the quantum vacuum with intense lasers.
"""

__version__ = "0.1.0"
