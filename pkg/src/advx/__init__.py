"""Adversarial evasion attack workbench.

Generates FGSM and ZOO attacks against desk-scale CNN classifiers across
perturbation-size grids, precomputes embedding projections, binned
aggregation cubes, and accuracy curves, and serves the results to an
interactive frontend through a read-only JSON API.
"""

__version__ = "0.1.0"
