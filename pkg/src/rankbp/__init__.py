"""Rank-k random graphs and finite-type marked branching processes."""
