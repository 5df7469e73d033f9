"""
Test package for vacuumprobe.
"""
