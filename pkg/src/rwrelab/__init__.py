"""rwrelab: random walks in i.i.d. random environments, with exact oracles."""

__version__ = "0.1.0"
