"""Constant-angle ruled surfaces, Frenet frames in E^n, and numerical checks."""
