"""
splr_unmix - simultaneously sparse and low-rank hyperspectral unmixing.

Incremental proximal (IPSpLRU) and ADMM (ADSpLRU) abundance estimators with
their single-prior ablations, a sliding-window driver for image cubes,
synthetic experiment generators and evaluation metrics.
"""

__version__ = "1.0.0"
