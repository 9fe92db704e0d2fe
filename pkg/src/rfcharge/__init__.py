"""Multi-antenna RF charging: channel model, nonlinear harvesters, beamforming and DDPG scheduling."""
from ._accel import HAVE_NUMBA, backend

__version__ = "0.1.0"
