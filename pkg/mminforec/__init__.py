"""mminforec: memory-augmented multi-instance contrastive predictive coding for sequential recommendation."""

__version__ = "0.1.0"
