from scneuro.pulse_io.bridge import BridgeStats, PulseBridge, stream_session
from scneuro.pulse_io.frame import PulseFrame, decode_frame, encode_frame

__all__ = [
    "BridgeStats",
    "PulseBridge",
    "PulseFrame",
    "decode_frame",
    "encode_frame",
    "stream_session",
]
