"""Boundary integral reconstruction of harmonic functions on plane
algebraic curves: Hefer decomposition, monodromy boundary tracing,
holomorphization of boundary data, and residue-tube quadrature of the
Cauchy-Fantappie kernel."""

from .algebra import (HomPoly3, HeferTriple, hefer_decompose,
                      hefer_identity_residual, PolynomialError)
from .geometry import (CurveDomain, ProjectivePoint, BoundaryTrace,
                       IntersectionSet, trace_boundary, intersect_line,
                       choose_barrier, attach_reference_points,
                       GeometryError, TransversalityError)
from .harmonic import (BoundaryField, ComponentField, ConnectorField,
                       CorrectionH, PrimitiveF, period_a, build_h,
                       primitive_f, lift_g, default_connectors,
                       HolomorphizationError)
from .kernel import (TubeGrid, GMoments, ReconstructionReport, build_tube,
                     kernel_det, compute_G, vandermonde_solve, reconstruct_u,
                     calibrate, KernelError, CalibrationError)
from .harness import (Scenario, Oracle, ScenarioError, make_scenario,
                      run_scenario, convergence_study)
from .config import RunConfig, ConfigError, parse_config

__version__ = "0.1.0"
