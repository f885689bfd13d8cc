"""Chain-level operad computations: Barratt-Eccles operad, little-cubes
filtration, complete graph cells, cobar constructions, twisting cochains."""

__version__ = "0.1.0"
