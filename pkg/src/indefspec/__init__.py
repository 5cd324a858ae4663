"""Spectral analysis of indefinite Sturm-Liouville operators with one turning point.

Modules: measure (spectral measures and moments), weyl (Weyl functions),
modelop (model operator and Jordan chains), eigen (eigenvalue classification
and spectrum search), infzone (infinite-zone Weyl data), sturm (m-coefficients
of potentials), critical (critical point at 0), cli.
"""

from .errors import *  # noqa: F401,F403

__version__ = "0.1.0"
