"""halfmap: lazily materialized uniform infinite half-planar quadrangulations
and triangulations, their geodesic rays, and the exact laws that govern how
those rays return to the boundary.

Subpackage map:

  labeled_trees  critically labeled plane trees and the min-label oracle
  mobiles        three-type Boltzmann mobiles for the triangular model
  treed_bridge   the two-sided boundary walk with grafted trees/mobiles
  bdg_map        corner sequences, successor arcs, and map assembly
  geodesics      maximal/minimal/random proper rays and boundary hit sets
  analytics      constants, recursions, renewal and power-series machinery
  montecarlo     replicate scheduling, estimates, and the test battery
  cli            command-line surface
"""

__version__ = "0.1.0"
