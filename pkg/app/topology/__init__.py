"""Differentiable 0-dim persistence and the topological characterization of networks."""
