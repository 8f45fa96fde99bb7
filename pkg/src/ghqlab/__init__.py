"""ghqlab: a desk-scale lattice laboratory for Green-hyperbolic operators,
bosonic (CCR/Weyl) and fermionic (CAR/Clifford) quantization, and the
locally covariant QFT axioms, with every identity verified as a
machine-checkable property."""

from .lattice import (CausalCone, LatticeSpacetime, Region, causal_cone,
                      causal_future, causal_hull, causal_past,
                      causally_disjoint, diamond, is_causally_compatible,
                      is_cauchy_slice_region, spacetime_pairing, time_band)
from .ops import (DiscreteFormsComplex, FiberPairing, LatticeOperator, Section,
                  adjointness_defect, apply, build_dalembert, build_dirac_1p1,
                  build_proca, delta_section, direct_sum,
                  random_margin_section)
from .green import (CauchyData, ComposedGreenPair, GreenPair,
                    dense_causal_solve, dirac_green, exact_sequence_check,
                    green_axiom_report, proca_green, read_cauchy_data,
                    solution_from_cauchy, time_boundary_flux)

__version__ = "0.1.0"
