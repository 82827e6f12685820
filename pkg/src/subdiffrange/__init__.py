"""Lipschitz functions with prescribed subdifferential ranges and a gradient-sampling estimator.

Modules
-------
geometry    convex bodies, ball unions, Hausdorff distances
coding      Peano-type coding curves and tours of compact sets
splitting   fat Cantor sets that split every dyadic interval
onedim      one-dimensional exhaustive constructions
multidim    bump atoms and their assemblies in the plane
estimator   sampled limiting and Clarke subdifferentials
cli         command-line entry point
"""

__version__ = "0.1.0"
