"""Bottom of the spectrum of the Neumann magnetic Laplacian on infinite wedges.

The wedge operator decomposes, by Fourier transform along the edge, into a
family of two-dimensional operators on a sector indexed by the edge
frequency ``tau``.  This package computes the band function of that family,
the half-plane and half-line model constants that bound it, and its
infimum over ``tau``.
"""

__version__ = "0.1.0"
