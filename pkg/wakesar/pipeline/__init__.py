"""Experiment configuration, orchestration and reporting."""
