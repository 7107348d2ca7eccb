"""Per-loop compiler selection for C programs.

Each outermost ``for`` nest is outlined into its own file, compiled with
every candidate optimizer, timed (or classified from hardware counters),
and the fastest object per loop is linked into one executable.
"""

__version__ = "0.1.0"
