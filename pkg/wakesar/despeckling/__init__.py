"""Speckle model, wavelet analysis, proximal solvers and image metrics."""
