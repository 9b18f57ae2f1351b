"""Satellite-UAV relay network simulator with hybrid FSO/RF links.

Subpackages cover node kinematics (dynamics), link-rate models (channel),
UAV propulsion energy (energy), multi-hop path throughput (network), the
MDP environment (env), the actor-critic trainer (marl), exhaustive-search
reference schemes (baselines) and the experiment CLI (cli).
"""

__version__ = "0.1.0"
