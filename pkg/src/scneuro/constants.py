SYNAPSE_KINDS = ("rec", "bg", "sfa")

# Parameters a phase-plane or transfer-curve sweep may vary.
SWEEP_AXES = ("g_rec", "g_sfa", "f_bg")

TICK_MS = 0.1
MAX_FANOUT = 3500
MAX_DELAYS = 4
# Spike weights are STP release weights; they fit six bits on chip and on the wire.
STP_WEIGHT_BITS = 6

# Philox stream ids under a network seed.
STREAM_BACKGROUND = 1
STREAM_STIMULUS = 2
STREAM_SWITCHING = 3

# Default neuron and network parameters.
NEURON_DEFAULTS = {
    "v_rest": -65.0,
    "v_reset": -80.0,
    "v_thresh": -50.0,
    "C_mem": 1.0,
    "tau_mem": 8.0,
    "T_refrac": 2.5,
    "tau_syn": 8.0,
    "E_syn": 0.0,
    "tau_sfa": 330.0,
    "E_sfa": -80.0,
}

NETWORK_DEFAULTS = {
    "N": 2880,
    "N_bg": 200,
    "k_rec": 20,
    "k_bg": 20,
    "g_bg": 5.0,
    "f_bg": 16.0,
}

OPEN_LOOP_STIMULATION_MS = 2000.0
OPEN_LOOP_DISCARD_MS = 1000.0
OPEN_LOOP_GAP_MS = 500.0
CLOSED_LOOP_DURATION_MS = 500_000.0

BURST_BIN_MS = 50.0
BURST_THRESHOLD_HZ = 20.0
MIN_VALID_BURSTS = 50

PULSE_MAGIC = b"PLSE"
PULSE_VERSION = 1
MAX_EVENTS_PER_FRAME = 180
