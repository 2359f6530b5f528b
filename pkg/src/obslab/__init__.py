"""obslab: classical and quantum observability for Schrodinger operators
with confining potentials."""

from .classical import (
    KfrakReport,
    kfrak_estimate,
    obs_time_shrink,
    time_in_ball,
    time_in_set,
    time_in_set_exact_flow,
    weak_thickness_check,
)
from .flow import (
    PhasePoint,
    StepTooLargeError,
    Trajectory,
    action_angle,
    default_dt,
    energy,
    exact_harmonic_flow,
    flow_divergence,
    from_action_angle,
    integrate_flow,
    sample_harmonic,
)
from .intervals import (
    ArithmeticTail,
    GeometricAnnuliTail,
    IntervalUnion,
    g_of_kappa,
    kappa_star,
    shrink_set,
)
from .oscillator import (
    AvoidingTrajectory,
    BracketingError,
    ConvergentList,
    IsotropyError,
    OscillatorSpec,
    aspect_ratio_bruteforce,
    avoiding_trajectory_two_cones,
    circular_orbit,
    classify_spherical,
    conical_axis_escape,
    convergents,
    critical_trajectory,
    d0,
    lambda_of_mu,
    lambda_theta,
    t_star_bounds,
    trajectory_radius_ratio,
    two_cones_T0,
)
from .potentials import (
    CriticalPoints,
    Harmonic,
    Perturbed,
    PotentialSpec,
    PowerConfining,
    potential_from_dict,
    potential_to_dict,
)
from .quantum import (
    GramianReport,
    HermiteBasis,
    QuadratureError,
    TruncationError,
    band_obs_cost,
    coherent_coeffs,
    coherent_mass_in_set,
    gaussian_phase_space_average,
    gramian,
    hermite_eval,
    indicator_matrix,
    propagate_coeffs,
    propagate_coherent,
)
from .sets import (
    ConicalArcs,
    FullSpace,
    HalfLineCone,
    ObservationSet,
    Punctured,
    Spherical,
    Thickened,
    TwoCones,
    Union,
    contains,
    lower_density,
    lower_density_liminf,
    mollified_cutoff,
    thicken,
)

__version__ = "0.1.0"
