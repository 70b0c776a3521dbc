"""Dynamic campaign tracking.

Predicts a crowdfunding campaign's daily success probability from its
static attributes, daily funding and review sentiment, and emits the
per-day tracking curve plus sentiment statistics.
"""

__version__ = "0.1.0"
