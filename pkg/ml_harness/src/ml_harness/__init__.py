"""Training harness for the tomography image models.

Two conditional WGAN-GP models over the dataset pipeline's image series:
an upsampler that maps short-exposure slices to their long-exposure
counterparts, and a segmenter that maps long-exposure slices to class
label maps.  Consumes runs through their manifest; emits checkpoints,
per-epoch history tables, and metric tables.
"""

__version__ = "0.1.0"
