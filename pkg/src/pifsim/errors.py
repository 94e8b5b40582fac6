"""Error taxonomy shared across the package.

ValidationError covers bad configuration and violated preconditions
(rejected before any physics runs).  ProtocolError covers failures that
surface mid-protocol from the data itself; its subclasses let callers
tell an empty probe signal from a signal that never decays or a
deconvolution gone unstable.
"""


class ValidationError(ValueError):
    """Configuration or precondition violation."""


class ProtocolError(RuntimeError):
    """A protocol stage failed on valid-looking input."""


class EmptySignalError(ProtocolError):
    """Probe record carries no signal (packet never reached the probe)."""


class NoDecayError(ProtocolError):
    """Probe signal never drops below threshold; cavity may hold a
    localized state."""


class DeconvolutionError(ProtocolError):
    """Spectral division produced an unusable injection (blow-up or
    excessive out-of-window energy)."""
