"""quadrep: degree-0/1/2 function representations with a quadratic-manifold
core, adaptive basis selection, and step-data denoising."""

__version__ = "0.1.0"
