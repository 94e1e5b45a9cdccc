"""Minimal dense-tensor network core: inference, loss, input gradients,
penultimate embeddings, training, and weight-file round-trips."""

from .architectures import ARCHITECTURES, cnn_a, cnn_b
from .layers import Conv2D, Dense, Flatten, MaxPool2x2, ReLU, SoftmaxOutput
from .network import (Network, forward, input_gradient, input_gradient_batch,
                      penultimate_embedding, predict, predict_batch, softmax,
                      softmax_cross_entropy, batch_cross_entropy)
from .probe import PixelProbe
from .train import TrainConfig, train
from .weights_io import load_weights, save_weights

__all__ = [
    "ARCHITECTURES", "cnn_a", "cnn_b",
    "Conv2D", "Dense", "Flatten", "MaxPool2x2", "ReLU", "SoftmaxOutput",
    "Network", "forward", "input_gradient", "input_gradient_batch",
    "penultimate_embedding", "predict", "predict_batch", "softmax",
    "softmax_cross_entropy", "batch_cross_entropy",
    "PixelProbe", "TrainConfig", "train", "load_weights", "save_weights",
]
