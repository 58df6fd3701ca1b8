"""Human-assisted dynamic target search: engine, simulator, and session service."""

__version__ = "0.1.0"
