"""HTTP layer over the tracking pipeline."""
