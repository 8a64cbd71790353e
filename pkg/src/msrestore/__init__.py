"""Multi-step service restoration planning for radial distribution networks with DGs."""

__version__ = "0.1.0"
