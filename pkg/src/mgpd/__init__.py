"""Multivariate generalized Pareto distributions."""
