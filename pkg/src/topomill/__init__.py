"""Chatter detection for milling from topological features of simulated vibrations.

The package simulates a single degree of freedom milling tool governed by a
delay differential equation with periodic coefficients, labels every point of
a (spindle speed, depth of cut) grid through the eigenvalues of the
discretized one-period state map, embeds the vibration signals into point
clouds, summarizes them with Vietoris-Rips persistence diagrams, and feeds
diagram features (Carlsson coordinates or template functions) to standard
classifiers.
"""

from .milling import (GridPoint, ProcessParams, SimConfig, TimeSeries,
                      delay_period, engagement, simulate, specific_force,
                      tooth_angle)
from .stability import (GridSpec, LabeledGrid, MonodromyResult, StabilityLabel,
                        UndeterminedBifurcationError, build_monodromy,
                        classify_eigenvalue, label_grid)
from .signal_prep import (EmbeddingParams, PointCloud, add_noise,
                          farthest_point_indices, permutation_entropy,
                          select_delay, select_dimension, subsample_cloud,
                          takens_embed)
from .persistence import (PersistenceDiagram, distance_matrix,
                          enclosing_radius, read_diagrams_csv,
                          rips_persistence, write_diagrams_csv)
from .features import (CarlssonFeatures, FeatureVector, TemplateMesh,
                       build_template_mesh, carlsson_coordinates,
                       carlsson_vector, concat_features, enumerate_subsets,
                       lagrange_basis, template_features, to_birth_lifetime)
from .classify import (ALGORITHMS, Dataset, EvalResult, Model, TrainingError,
                       default_hyperparams, evaluate, predict, split, train)
from .config import (ExperimentConfig, default_config, derive_seed,
                     load_config)
from .pipeline import Pipeline, RunSummary, StageError, report, run

__version__ = "0.1.0"
