"""Monte-Carlo and quadrature lab for crossing counts, local times and covering bounds of planar Brownian motion."""
__version__ = "0.1.0"
