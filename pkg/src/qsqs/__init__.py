"""Detection post-processing built around a binary quadratic objective.

Instead of greedily discarding every box that overlaps a higher-scoring
one, the detections of an image are scored jointly: a QUBO rewards
confident boxes on its diagonal and penalizes overlapping pairs off it,
and a sampler picks the subset with the best total. Rejected boxes can
then be softly rescored against the kept set rather than dropped.

The library exposes the pieces individually (geometry, objective
construction, samplers, suppression schemes, evaluation metrics, JSON
file formats) plus scikit-learn style transformer wrappers and a CLI.
"""

from .estimators import (BaseSuppressor, NmsSuppressor, QuboSuppressor,
                         SoftNmsSuppressor, check_detections,
                         detections_to_array, make_suppressor)
from .evaluation import (ApMode, ClassEval, EvalReport, GroundTruth,
                         MatchFlag, average_precision, evaluate,
                         log_average_miss_rate, match_detections, mean_ap)
from .exceptions import (EmptyInputError, InvalidInputError, ParseError,
                         QsqsError, TooLargeError, UndefinedMetricError,
                         ValidationError)
from .geometry import (BoundingBox, boxes_to_array, iou, iou_matrix,
                       pairwise_iou, spatial_overlap, spatial_overlap_matrix)
from .qubo import (EnhConfig, IsingModel, QsqsWeights, QuboInstance, Sense,
                   build_q, ising_energy, negate, qubo_energy,
                   qubo_from_json_dict, to_ising)
from .solvers import (AnnealingSampler, AnnealSchedule, ExhaustiveSampler,
                      GreedySampler, Sample, SampleSet, TabuParams,
                      TabuSampler, pick_solution, random_qubo, solve_anneal,
                      solve_exhaustive, solve_greedy, solve_tabu)
from .suppression import (Scheme, SuppressionConfig, gaussian_rescore, nms,
                          qsqs, soft_nms, suppress_image)

__version__ = "0.1.0"

__all__ = [
    "AnnealSchedule", "AnnealingSampler", "ApMode", "BaseSuppressor",
    "BoundingBox", "ClassEval", "EmptyInputError", "EnhConfig", "EvalReport",
    "ExhaustiveSampler", "GreedySampler", "GroundTruth", "InvalidInputError",
    "IsingModel", "MatchFlag", "NmsSuppressor", "ParseError", "QsqsError",
    "QsqsWeights", "QuboInstance", "QuboSuppressor", "Sample", "SampleSet",
    "Scheme", "Sense", "SoftNmsSuppressor", "SuppressionConfig",
    "TabuParams", "TabuSampler", "TooLargeError", "UndefinedMetricError",
    "ValidationError", "average_precision", "boxes_to_array",
    "build_q", "check_detections", "detections_to_array", "evaluate",
    "gaussian_rescore", "iou", "iou_matrix", "ising_energy",
    "log_average_miss_rate", "make_suppressor", "match_detections",
    "mean_ap", "negate", "nms", "pairwise_iou", "pick_solution", "qsqs",
    "qubo_energy", "qubo_from_json_dict", "random_qubo", "solve_anneal",
    "solve_exhaustive", "solve_greedy", "solve_tabu", "soft_nms",
    "spatial_overlap", "spatial_overlap_matrix", "suppress_image",
    "to_ising",
]
