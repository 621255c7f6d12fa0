"""tgkit: temporal graph event streams, leakage-free sampling, and evaluation."""

from .core import (Event, EventKind, IngestError, SchemaError, TemporalGraph,
                   ingest_events, validate)
from .edgebank import EdgeBank
from .evaluation import (MetricError, MetricsReport, PersistenceScorer, Split,
                         SplitError, auc, average_precision,
                         chronological_split, evaluate_link_prediction,
                         evaluate_node_classification, macro_f1, mrr)
from .features import (FeatureBlock, FeatureTable, FitError, TransformParams,
                       apply_transform, fit_transform_params)
from .index import (TemporalAdjacency, build_index, degree_before,
                    last_event_time, neighbors_before, neighbors_in_window)
from .io import (CacheError, decode_flat_batch, encode_flat_batch,
                 export_stats, read_cache, read_events_csv, write_cache,
                 write_events_csv)
from .negatives import (NegativeSpec, SeenSet, build_seen_set,
                        historical_negatives, random_negatives)
from .rng import RngStreams
from .sampling import (EdgeBlock, LinkBatch, MostRecent, TemporalBatch,
                       Uniform, iterate_link_batches, sample_khop,
                       sample_neighbors)
from .snapshot import (FixedCount, FixedEvents, FixedWidth, Snapshot,
                       SnapshotSpec, make_snapshots, snapshots_to_events,
                       to_static)

__version__ = "0.1.0"
