"""sinetract: entire functions from sine-wiggled tracts.

Library layout:

- geometry:  triangle degeneracy, distortion, Koebe bounds
- tract:     the map h(z) = a z + i b sin z, its strip tract, and the
             quadrature-ready boundary of W = exp(tract)
- cauchy:    Cauchy-integral evaluation of the glued entire function,
             construction constants, the classical half-strip oracle
- logdyn:    disjoint-type rescaling, logarithmic transform F, inverse
             branches, external addresses
- hairs:     hair tracing by pullbacks, marker points, wiggle certificates
- render:    escape/attraction rasters with hair overlays
- verify:    the registered invariant suite behind the `verify` command
- cli:       command-line front end
"""

__version__ = "0.1.0"
