"""Matrix-product-state simulation of broadband quantum optical pulses."""

from pulsemps.mps import (
    VidalMPS,
    TwoSiteGate,
    LocalMPO,
    init_coherent_mps,
    init_vacuum_mps,
    photon_density,
    g2,
)

__all__ = [
    "VidalMPS",
    "TwoSiteGate",
    "LocalMPO",
    "init_coherent_mps",
    "init_vacuum_mps",
    "photon_density",
    "g2",
]

__version__ = "0.1.0"
