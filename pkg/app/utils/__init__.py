"""Seed derivation, timing and identifier helpers."""
