"""drivelab: a shared-autonomy lane-keeping laboratory.

The package simulates a lane-keeping vehicle in two control modes. In
human-in-control mode the driver's steering and acceleration actuate the
vehicle directly. In autonomy-in-control mode a reference-tracking
controller drives while the human's steering acts purely as advice: a
Gaussian-mixture Kalman filter interprets each suggestion through a
behavioral steering model to decide which candidate lane center the
driver believes in.

Modules
-------
dynamics    kinematic bicycle model, feedback linearization, discrete plant
controller  proportional-derivative reference tracking for autonomy mode
belief      Gaussian-mixture Kalman filter over lane-center hypotheses
steering    two-point visual geometry, driver model, fitting, synthetic driver
analysis    residuals, whiteness testing, ECDFs, two-sample KS statistics
records     trajectory persistence (text and binary, versioned)
config      scenario configuration and YAML round-trip
harness     closed-loop rollouts, batch experiments
session     realtime websocket session host for live clients
cli         command line front end (simulate / analyze / fit / batch / serve)
"""

from .dynamics import (
    Pose,
    VehicleState,
    DriverCommand,
    LinearizedInput,
    PlantModel,
    continuous_derivative,
    step_continuous,
    feedback_linearize,
    apply_linearization,
    make_plant,
    WHEELBASE,
    KAPPA,
    V_MIN,
    DELTA_MAX,
    A_MAX,
)
from .controller import Reference, GainSet, control, closed_loop_matrix, controllable_spectral_radius
from .belief import (
    MixtureComponent,
    BeliefState,
    Measurement,
    NoiseConfig,
    predict,
    update_measurement,
    update_advisor,
    mixture_mean,
)
from .steering import (
    VisualAngles,
    SteeringCoefficients,
    RegressorWindow,
    LaneGeometry,
    visual_angles,
    predict_steering,
    fit_coefficients,
    synthetic_driver,
    SyntheticDriver,
    DEFAULT_DRIVER_COEFFICIENTS,
    HUMAN_FITTED_COEFFICIENTS,
)
from .analysis import (
    ResidualSeries,
    AcfReport,
    Ecdf,
    KsResult,
    residuals,
    autocorrelation,
    ecdf,
    ks_threshold,
    ks_two_sample,
    central_cdf,
    cross_test,
    residual_band_report,
)
from .records import TrajectoryRecord, save_record, load_record
from .config import ScenarioConfig, default_initial_mixture, load_config, save_config
from .harness import run_human_in_control, run_autonomy_in_control, run_batch, SimulationLoop, ReplayDriver

__version__ = "0.1.0"
