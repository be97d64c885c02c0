"""Stochastic replicator dynamics: games, equilibria, simulation, bounds."""

from ._replab import *  # noqa: F401,F403
from ._replab import __version__, run_cli  # noqa: F401
