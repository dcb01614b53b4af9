"""Local information measures of emergence in discrete Markov systems."""

from importlib.metadata import PackageNotFoundError, distribution

try:
    __version__ = distribution("flicker").version
except PackageNotFoundError:  # running from a source checkout
    __version__ = "0.0.0"
__author__ = "Flicker developers"
