"""freefield: exact free-field vertex superalgebra computations."""

__version__ = "0.1.0"
