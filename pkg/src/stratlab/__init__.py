"""Exact computations with level-truncated stratified bundles in characteristic p."""
