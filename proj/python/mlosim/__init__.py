"""Python front end for the flow-level multi-link Wi-Fi simulator.

The compiled core exchanges structured data as JSON strings; this wrapper
turns them into plain dicts.
"""

import json

try:
    from . import _core
except ImportError:  # in-tree runs: the module sits on PYTHONPATH directly
    import _core

path_loss_db = _core.path_loss_db
link_snr_db = _core.link_snr_db
snr_to_rate_mbps = _core.snr_to_rate_mbps
vr_frame_size_inv_cdf = _core.vr_frame_size_inv_cdf
vr_interarrival_inv_cdf = _core.vr_interarrival_inv_cdf
vr_flow_rate_mbps = _core.vr_flow_rate_mbps
enumerate_actions = _core.enumerate_actions
action_space_size = _core.action_space_size
slci_decide = _core.slci_decide
mcaa_decide = _core.mcaa_decide
largest_remainder = _core.largest_remainder
reward = _core.reward
reward_hindsight = _core.reward_hindsight


def default_config(preset="custom"):
    """Full scenario config dict for a named preset (U1, U2, desk, custom)."""
    return json.loads(_core.default_config_json(preset))


def build_network(topology, seed):
    """Deterministic network layout for a topology config dict."""
    return json.loads(_core.build_network_json(json.dumps(topology), seed))


def run_experiment(config, threads=0, include_events=False):
    """Runs all seeds of a scenario config dict and returns the report dict."""
    return json.loads(
        _core.run_experiment_json(json.dumps(config), threads, include_events)
    )


def compare_policies(configs, threads=0):
    """Median/spread table plus pairwise gains for configs differing only in policy."""
    return json.loads(
        _core.compare_policies_json([json.dumps(c) for c in configs], threads)
    )
