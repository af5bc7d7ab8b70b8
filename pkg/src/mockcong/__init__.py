"""Linear congruences for Ramanujan's mock theta functions via truncated q-series."""

__version__ = "0.1.0"
