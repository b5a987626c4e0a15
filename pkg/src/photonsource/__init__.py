"""Simulation and analysis toolkit for single-photon sources.

Subpackages cover the photon-number layer (``fock``), heralded pair
sources (``spdc``), cavity-enhanced quantum-dot emitters (``emitter``),
two-photon interference (``hom``), correlation-histogram synthesis and
fitting (``tcspc``), source figure-of-merit comparison (``fom``) and a
scenario-driven command line (``cli``).
"""

from . import emitter, errors, fock, fom, hom, spdc, tcspc

__all__ = ["emitter", "errors", "fock", "fom", "hom", "spdc", "tcspc"]

__version__ = "0.1.0"
