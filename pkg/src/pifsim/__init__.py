"""Time reversal of lattice wave packets from a single boundary point.

A packet leaking out of a cavity through one probe site is recorded,
the record is turned into an exact source by deconvolving the probe's
retarded Green's function, and re-injection drives the cavity backwards
through its own history.  A scaled conjugate-mirror source (TRM) is
included as the baseline the inverse filter improves on.
"""

from .errors import (DeconvolutionError, EmptySignalError, NoDecayError,
                     ProtocolError, ValidationError)
from .evolve import CrankNicolson, EvolveResult, StepperConfig, evolve, step
from .greens import dyson_check, impulse_response, resolvent_element
from .lattice import (ChainModel, PotentialProfile, UnitSystem, build_chain,
                      hamiltonian_matvec)
from .metrics import (cavity_reversal_error, centroid_velocity,
                      echo_fidelity, outer_density, probe_echo_correlation,
                      shape_correlation, support_mask)
from .protocols import (ProtocolConfig, ProtocolReport, run_forward, run_pif,
                        run_trm)
from .scenario import (Scenario, apply_overrides, effective_dict,
                       load_scenario, realize, write_effective_cfg)
from .signals import (EnergyGrid, InjectionSchedule, ProbeRecord,
                      RecordingWindow, SpectralSignal, detect_window,
                      reversed_target, to_energy, to_time)
from .wavefield import (WaveField, conjugate, density, gaussian_packet, norm,
                        overlap, total_probability)

__version__ = "0.1.0"

__all__ = [
    "ChainModel", "CrankNicolson", "DeconvolutionError", "EmptySignalError",
    "EnergyGrid", "EvolveResult", "InjectionSchedule", "NoDecayError",
    "PotentialProfile", "ProbeRecord", "ProtocolConfig", "ProtocolError",
    "ProtocolReport", "RecordingWindow", "Scenario", "SpectralSignal",
    "StepperConfig", "UnitSystem", "ValidationError", "WaveField",
    "apply_overrides", "build_chain", "cavity_reversal_error",
    "centroid_velocity", "conjugate", "density", "detect_window",
    "dyson_check", "echo_fidelity", "effective_dict", "evolve",
    "gaussian_packet", "hamiltonian_matvec", "impulse_response",
    "load_scenario", "norm", "outer_density", "overlap",
    "probe_echo_correlation", "realize", "resolvent_element",
    "reversed_target", "run_forward", "run_pif", "run_trm",
    "shape_correlation", "step", "support_mask", "to_energy", "to_time",
    "total_probability", "write_effective_cfg",
]
