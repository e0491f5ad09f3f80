"""Trace generation, routing, ground truth, and scoring."""
