"""Cutting-plane solvers for nonlinear binary optimization."""
