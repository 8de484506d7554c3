"""Synthetic 2-D binary classification tasks."""
