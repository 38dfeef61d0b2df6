"""Benchmarks for non-selfadjoint elliptic eigenvalue problems with
defective eigenvalues of prescribed ascent."""

__version__ = "0.1.0"
