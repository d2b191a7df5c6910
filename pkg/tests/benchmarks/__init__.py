"""Convergence benchmarks over the named graph suites."""
