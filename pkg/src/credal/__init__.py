"""Credal regions from conformal calibration: simplex, calibration, regions, credal sets, uncertainty."""
