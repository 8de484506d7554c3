"""Experiment harness: training runs, cross-validated evaluation, meta comparison and reports."""
