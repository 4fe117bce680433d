"""Detection of sparse attractiveness signals in the sparse beta-model."""
from .graph_model import GraphSample, ModelParams, SignalSpec, make_signal, sample_graph
from .kernels import BACKEND

__all__ = ["BACKEND", "GraphSample", "ModelParams", "SignalSpec", "make_signal", "sample_graph"]
__version__ = "0.1.0"
