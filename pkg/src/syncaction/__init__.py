"""Synchronisation of coupled oscillators and action-based diagnostics."""
from __future__ import annotations

from ._backend import BACKEND
from .action import (FitUndefinedError, QoppaFit, RegimeReport, TrajectoryRecord,
                     accumulate_action, action_derivative, attenuation_action, build_record,
                     classify_regime, config_trajectory, fit_qoppa, frequency_shifts,
                     intensity_ratio, lagrangian, lagrangian_series, record_from_run,
                     signaling_action, signaling_action_from_events, signaling_frequency,
                     wavelength_shift)
from .config import ConfigError, ExperimentConfig, load_config, validate_config
from .graph import (AttenuationParams, Network, NetworkFormatError, PerturbationSpec,
                    apply_perturbation, build_topology, coupling_from_distance,
                    coupling_from_distance_matrix, graph_distance_matrix, load_edge_list,
                    load_network, save_edge_list, save_network)
from .kuramoto import (KuramotoRun, NumericBlowupError, OrderParameter, PhaseState,
                       amplitude_ratio, effective_coupling, integrate_step, kuramoto_derivative,
                       order_parameter, order_parameter_series, path_sum_coupling, simulate)
from .probe import (ConditionedAverage, EmptySelectionError, InsufficientDataError, KernelSpec,
                    ProbeConfig, attach_probe, conditioned_average, kernel_observable,
                    probe_estimate)
from .pulse import (CircleState, PulseEvent, PulseParams, PulseRun, PulseSimulator,
                    advance_phases, crossing_times, fire_and_propagate, phase_response,
                    read_event_log, run_pulse_sim, write_event_log)
from .records import export_figure_data, read_record
from .runner import ExitReport, run_experiment

__version__ = "0.1.0"
