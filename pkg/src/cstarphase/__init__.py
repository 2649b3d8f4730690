"""Geometric phases of a spin-1/2 driven by a magnetic field and coupled to a second spin.

The package is organised bottom-up:

``linalg``    small dense complex kernels (tensor products, partial trace, eigh, expm)
``model``     Hamiltonian, analytic spectrum, eigenvectors, reduced density matrices
``pathspec``  parameter paths and the line-oriented path DSL
``geometry``  Berry/monopole and C*-connections, path-ordered exponentials
``dynamics``  exact propagation, C*-adiabatic transport, coherence trajectories
``cli``       command-line front end
"""

from cstarphase.model import Level, ParamPoint

__all__ = ["Level", "ParamPoint"]
__version__ = "0.1.0"
