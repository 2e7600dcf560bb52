"""Reference-governor constraint enforcement for a thruster-assisted
variable-length inverted pendulum, with an independent compliant-ground
slip oracle and scenario harness."""

from .constraints import (ConstraintLinearization, ConstraintParams,
                          ReferenceVector, eval_constraints, fd_jacobian,
                          linearize)
from .contact import (ContactInstabilityError, GroundParams, LegTether,
                      PlantState, compliant_plant_step, friction_force,
                      initial_plant_state, normal_force, plant_energy,
                      replay_through_contact, track_through_contact)
from .control import (CartesianReference, TrackingGains, radial_projection,
                      thruster_feedback)
from .governor import (DegenerateGradientError, ErgRates, GovernorState,
                       erg_step, lyapunov, nullspace_basis)
from .rom import (DegeneratePivotError, GrfEstimate, PendulumState,
                  ThrusterCommand, VlipCoords, cartesian_from_vlip, grf,
                  grf_estimate, kkt_solve, pendulum_energy,
                  pendulum_jacobian, rom_accel, solve_lambda, step_rk4,
                  vlip_chart_blocks, vlip_from_cartesian)
from .scenarios import (ScenarioConfig, SimDiagnostics, SimResult,
                        SimulationError, WalkParams, admissible_jacobian,
                        admissible_rows, cop_schedule, default_config,
                        fd_admissible_jacobian, initial_state, load_config,
                        make_reference, pivot_at, run_simulation,
                        vlip_config, vlip_reference, walk_config,
                        walk_reference)
from .telemetry import TelemetryRecord, csv_header, emit_plots, \
    export_csv, read_csv

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
