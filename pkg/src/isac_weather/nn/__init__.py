from .adam import AdamState, adam_step
from .losses import classification_grad, loss_classification, loss_regression, regression_grad
from .model import CnnModel, backward, fc_input_size, forward, predict_class, predict_value

__all__ = [
    "AdamState",
    "CnnModel",
    "adam_step",
    "backward",
    "classification_grad",
    "fc_input_size",
    "forward",
    "loss_classification",
    "loss_regression",
    "predict_class",
    "predict_value",
    "regression_grad",
]
