"""Phase-transition energies, fractional perimeters and cone stability.

Submodules:

``landau``         Landau free energies in a scalar order parameter.
``potential``      Double-well potentials and the surface tension constant.
``localfield``     Discrete local phase-field energy, descent and layers.
``nonlocalfield``  Fractional Laplacian and Gagliardo-type energies.
``geometry``       Interactions, fractional perimeter, nonlocal curvature.
``interfaces``     Density, band, clean-ball and trapping diagnostics.
``conestab``       Radial stability form for minimal cones.
``cli``            Command-line driver.
"""

from __future__ import annotations

__version__ = "0.1.0"
