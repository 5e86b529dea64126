"""beamrate: rate analysis and simulation for random-beamforming downlinks
with CDF-based scheduling and selective feedback."""

__version__ = "0.1.0"
