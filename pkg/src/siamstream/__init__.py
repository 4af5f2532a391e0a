"""Online active learning on data streams with siamese similarity models.

The package pairs a bounded per-class memory with either a siamese
similarity network or a softmax classifier, queries labels through an
adaptive randomised threshold under an explicit spending budget, and
evaluates everything prequentially with fading class recalls. Synthetic
drifting streams and CSV ingestion live in `streams`; `runner.run` binds
one method to one stream; the `siamstream` command drives experiment
grids from flat config files.
"""

from .active import BudgetState, StrategyState, budget_allows, budget_update, decide
from .ensemble import (WeightedMajorityEnsemble, ensemble_criterion, ensemble_predict,
                       ensemble_train, ensemble_weight_update)
from .evaluation import MetricsRow, PrequentialTracker, aggregate_runs
from .memory import MultiQueue
from .models import (PairBatch, SiameseModel, StandardModel, build_pairs,
                     init_siamese, init_standard, input_space_criterion,
                     pair_similarity, siamese_criterion, siamese_predict,
                     siamese_train, standard_predict, standard_train_on_memory,
                     standard_train_one)
from .nn import DenseNetwork, NetworkSpec, adam_step, backward, forward, init_network, loss, train_epoch
from .runner import METHODS, GridResult, MethodConfig, RunResult, run, run_grid
from .streams import (DriftSchedule, ImbalanceSpec, LabeledInstance, StreamData,
                      StreamSpec, load_csv_stream, make_concept, make_stream)

__version__ = "0.1.0"
