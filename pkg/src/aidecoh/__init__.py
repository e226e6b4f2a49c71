"""Atom-interferometer response to long-range-force backgrounds.

Closed-form populations, phases and decoherence for gravitating baths,
bias fields, close fly-bys and passing charges, together with Monte Carlo
and trajectory-integration oracles that check them.
"""
__version__ = "0.1.0"
