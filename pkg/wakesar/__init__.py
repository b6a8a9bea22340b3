"""
wakesar: simulated SAR ocean scenes with Kelvin ship wakes, log-normal
speckle, and log/wavelet-domain despeckling by forward–backward splitting.
"""

__version__ = "1.0.0"
