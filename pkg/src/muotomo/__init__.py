"""Muon scattering tomography of reinforced concrete.

Simulation (cosmic muons, multiple scattering, fibre tracker), PoCA
reconstruction onto a voxel grid, randomized concrete-sample generation,
and image-quality / segmentation metrics, behind a dataset CLI.
"""

__version__ = "0.1.0"
