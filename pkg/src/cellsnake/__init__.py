"""Hybrid active-contour cell segmentation and overlap-based tracking."""

from ._backend import active_backend, available_backends, use_backend
from .align import AlignmentResult, Match, SegmentGroup, align_frames, brute_force_align, overlap_weight
from .errors import (CellsnakeError, ConfigError, DataError, DegenerateContourError, DegenerateHistogramError,
                     FrameMismatchError, ImageFormatError, InstanceTooLargeError, NotGrayscaleError,
                     SceneSpecError)
from .fileio import load_image, read_label_map, save_label_map, save_pgm
from .image import GrayImage, ScalarField, VectorField, edge_energy, gaussian_smooth, image_energy
from .pipeline import (AlignmentSettings, PipelineConfig, Track, frame_mask, plain_snake, process_frame,
                       track_sequence)
from .segment import Segment, SegmenterSettings, Segmentation, segment_image, trace_boundary
from .snake import Contour, EvolutionReport, SnakeParams, evolve, evolve_step, internal_energy
from .synth import CellSpec, SceneSpec, mask_jaccard, render_sequence

__version__ = "0.1.0"

__all__ = [
    "active_backend",
    "available_backends",
    "use_backend",
    "AlignmentResult",
    "Match",
    "SegmentGroup",
    "align_frames",
    "brute_force_align",
    "overlap_weight",
    "CellsnakeError",
    "ConfigError",
    "DataError",
    "DegenerateContourError",
    "DegenerateHistogramError",
    "FrameMismatchError",
    "ImageFormatError",
    "InstanceTooLargeError",
    "NotGrayscaleError",
    "SceneSpecError",
    "load_image",
    "read_label_map",
    "save_label_map",
    "save_pgm",
    "GrayImage",
    "ScalarField",
    "VectorField",
    "edge_energy",
    "gaussian_smooth",
    "image_energy",
    "AlignmentSettings",
    "PipelineConfig",
    "Track",
    "frame_mask",
    "plain_snake",
    "process_frame",
    "track_sequence",
    "Segment",
    "SegmenterSettings",
    "Segmentation",
    "segment_image",
    "trace_boundary",
    "Contour",
    "EvolutionReport",
    "SnakeParams",
    "evolve",
    "evolve_step",
    "internal_energy",
    "CellSpec",
    "SceneSpec",
    "mask_jaccard",
    "render_sequence",
]
