"""Iterative diffusion-based image editing with ROI-mask control, transition
clips, and convergence diagnostics on analytic Gaussian-mixture domains."""

__version__ = "0.1.0"

from .denoiser import (Condition, ConditionBlend, GmmDenoiser, GmmModel,
                       Mixture, ParzenDenoiser, blend_conditions, gmm_eps,
                       measure_c2, mixture_logpdf, parzen_eps)
from .metrics import (IdentityEmbedder, RandomProjectionEmbedder, clip_i,
                      confidence, kid, mae)
from .pie import (ConvergenceBound, PieConfig, Trajectory, composite_roi,
                  diff_heatmap, extrapolation_walk, pie_run, pie_stage,
                  prop2_bound, step_decay_fit, svd_walk)
from .scheduler import (NoiseSchedule, build_schedule, ddim_chain, ddim_step,
                        forward_diffuse)
from .toydata import ClassSpec, DomainSpec, build_domain, make_mask, render_mean, sample
from .transition import VideoClip, concat_clips, generate_transition, make_clip_skeleton

__all__ = [
    "Condition", "ConditionBlend", "GmmDenoiser", "GmmModel", "Mixture",
    "ParzenDenoiser", "blend_conditions", "gmm_eps", "measure_c2",
    "mixture_logpdf", "parzen_eps",
    "IdentityEmbedder", "RandomProjectionEmbedder", "clip_i", "confidence",
    "kid", "mae",
    "ConvergenceBound", "PieConfig", "Trajectory", "composite_roi",
    "diff_heatmap", "extrapolation_walk", "pie_run", "pie_stage",
    "prop2_bound", "step_decay_fit", "svd_walk",
    "NoiseSchedule", "build_schedule", "ddim_chain", "ddim_step",
    "forward_diffuse",
    "ClassSpec", "DomainSpec", "build_domain", "make_mask", "render_mean", "sample",
    "VideoClip", "concat_clips", "generate_transition", "make_clip_skeleton",
]
