"""Lightweight MLP intrusion detection for CAN bus traffic."""
from .canio import RawCanFrame, extract_features, normalize, parse_log_line
from .dataset import Dataset, gen_synthetic, kfold, load_csv, split, subsample_per_class
from .kernels import BACKEND
from .modelfile import load_model, save_model
from .nncore import Model, ModelArchitecture, allocate_layers, kaiming_init, predict
from .trainer import TrainConfig, evaluate, train

__version__ = "0.1.0"
