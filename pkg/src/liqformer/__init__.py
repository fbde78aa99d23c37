"""Multi-modal transformer for earthquake-induced liquefaction prediction."""

__version__ = "0.1.0"
