"""Diestel-Leader graphs: combinatorics, spectra, Cayley realizations and random walks."""

__version__ = "0.1.0"
