"""Cycle-level simulator of a weight-stationary systolic DNN accelerator
running under voltage underscaling with timing-error recovery."""

from undervolt.qarith import QTensor, quantize, dequantize, mac_step, relu_requantize
from undervolt.policies import PolicyConfig, PolicyKind
from undervolt.errmodel import VoltageErrorProfile, default_profile
from undervolt.dataflow import ArrayConfig, LayerStats, run_layer, simulate_chain, plan_blocks, cycle_count
from undervolt.energy import EnergyParams, mac_energy, layer_energy, savings
from undervolt.tuner import TunerInput, tune_per_layer

__version__ = "0.1.0"

__all__ = [
    "QTensor",
    "quantize",
    "dequantize",
    "mac_step",
    "relu_requantize",
    "PolicyConfig",
    "PolicyKind",
    "VoltageErrorProfile",
    "default_profile",
    "ArrayConfig",
    "LayerStats",
    "run_layer",
    "simulate_chain",
    "plan_blocks",
    "cycle_count",
    "EnergyParams",
    "mac_energy",
    "layer_energy",
    "savings",
    "TunerInput",
    "tune_per_layer",
]
