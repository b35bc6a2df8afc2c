"""Desk-scale lab for assignment-coupled diffusion training.

Pairs every training batch with its noise batch by solving a linear
assignment problem on pairwise distances, then diffuses with the paired
noise. Ships the exact solver, cost kernels with half-precision
quantization and sharding, a minimal DDIM stack with an analytic-gradient
MLP denoiser, toy datasets, and an experiment harness with CSV reports.
"""

from .assign import (AssignMode, AssignStats, ConditionalWeightCurve, SweepRow,
                     apply_mode, assign_noise, assign_noise_flipped,
                     distance_reduction_sweep, empirical_conditional_weights)
from .config import TrainConfig, config_lines, load_config, parse_config_text
from .cost import (Metric, paired_cost, pairwise_cost, quantize_batch,
                   sharded_pairwise_cost)
from .data import (ImageDataset, ToyDataset, gauss8_centers, load_cifar10_binary,
                   sample_noise, sample_toy, serialize_cifar10)
from .denoiser import (DenoiserModel, OptimizerState, adam_step, embed_time, forward,
                       init_model, init_optimizer, load_checkpoint, loss_and_grads,
                       optimizer_step, save_checkpoint)
from .diffusion import (DiffusionSchedule, OraclePrediction, SamplerConfig, ddim_step,
                        default_beta_range, forward_diffuse, make_schedule,
                        oracle_noise_prediction, sample, sampler_config)
from .harness import (MetricsRecord, assign_bench, compare_modes, sliced_wasserstein,
                      train_one)
from .lap import (Assignment, brute_force_lap, reset_solve_call_count,
                  solve_call_count, solve_lap)

__all__ = [
    "AssignMode", "AssignStats", "Assignment", "ConditionalWeightCurve",
    "DenoiserModel", "DiffusionSchedule", "ImageDataset", "Metric", "MetricsRecord",
    "OptimizerState", "OraclePrediction", "SamplerConfig", "SweepRow", "ToyDataset",
    "TrainConfig", "adam_step", "apply_mode", "assign_bench", "assign_noise",
    "assign_noise_flipped", "brute_force_lap", "compare_modes", "config_lines",
    "ddim_step", "default_beta_range", "distance_reduction_sweep", "embed_time",
    "empirical_conditional_weights", "forward", "forward_diffuse", "gauss8_centers",
    "init_model", "init_optimizer", "load_checkpoint", "load_cifar10_binary",
    "load_config", "loss_and_grads", "make_schedule", "optimizer_step",
    "oracle_noise_prediction", "paired_cost", "pairwise_cost", "parse_config_text",
    "quantize_batch", "reset_solve_call_count", "sample", "sample_noise",
    "sample_toy", "sampler_config", "save_checkpoint", "serialize_cifar10",
    "sharded_pairwise_cost", "sliced_wasserstein", "solve_call_count", "solve_lap",
    "train_one",
]
