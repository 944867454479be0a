"""Command-line interface for mate_reid."""
