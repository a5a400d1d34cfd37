"""Solvers for evolution equations with time-derivative memory."""
