"""Parametric sparse-cut approximation toolkit with brute-force verification."""
