"""Greedy, measurement-efficient identification of LTI systems in the Loewner framework."""
from loewnerid.exceptions import (ConfigError, LoewnerIdError, NumericalError)
from loewnerid.greedy import GreedyConfig, GreedyHistory, greedy_loop, mask_product, select_point
from loewnerid.loewner import (LoewnerPencil, MeasurementSet, build_pencil, compress_realize,
                               conjugate_augment, loewner_model, realify, realize, split_points)
from loewnerid.lti import (FrequencyGrid, StateSpace, discretize, eval_tf, freqresp, make_penzl,
                           make_random_stable, make_time_benchmark, simulate_discrete)
from loewnerid.measurement import Oracle, PlantSimulator, load_model, save_model
from loewnerid.report import ExperimentConfig, h2_grid_error, run_equidistant, run_experiment
from loewnerid.timedomain import estimate_tf_pair, greedy_time_loop

__version__ = '0.1.0'

__all__ = [
    'ConfigError', 'LoewnerIdError', 'NumericalError',
    'GreedyConfig', 'GreedyHistory', 'greedy_loop', 'mask_product', 'select_point',
    'LoewnerPencil', 'MeasurementSet', 'build_pencil', 'compress_realize', 'conjugate_augment',
    'loewner_model', 'realify', 'realize', 'split_points',
    'FrequencyGrid', 'StateSpace', 'discretize', 'eval_tf', 'freqresp', 'make_penzl',
    'make_random_stable', 'make_time_benchmark', 'simulate_discrete',
    'Oracle', 'PlantSimulator', 'load_model', 'save_model',
    'ExperimentConfig', 'h2_grid_error', 'run_equidistant', 'run_experiment',
    'estimate_tf_pair', 'greedy_time_loop',
]
