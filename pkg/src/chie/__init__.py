"""chie: integral-equation solver for the 2D Cahn-Hilliard wetting problem."""

__version__ = "0.1.0"
