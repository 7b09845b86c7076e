"""Simulations of a two-qubit non-stoquastic quantum annealing protocol."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0+unknown"
