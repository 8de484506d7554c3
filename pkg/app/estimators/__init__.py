"""Downstream predictors fitted on topological features."""
