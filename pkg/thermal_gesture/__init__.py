"""
thermal-gesture - Gesture recognition on low-resolution thermal frames with an
MMV spiking wake-up detector gating R-PCA hand segmentation
"""

__version__ = "0.1.0"

from .models.mmv import MmvNetwork, TernaryConnectivity
from .models.thermal import Acquisition, SpikeRaster, ThermalFrame, ThermalWindow
from .models.track import GestureClass, GestureEvent, GestureTrack
from .services.errors import ServiceError

__all__ = [
    'Acquisition',
    'GestureClass',
    'GestureEvent',
    'GestureTrack',
    'MmvNetwork',
    'ServiceError',
    'SpikeRaster',
    'TernaryConnectivity',
    'ThermalFrame',
    'ThermalWindow',
]
