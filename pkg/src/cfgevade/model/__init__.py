# Init for cfgevade.model package
from .base import SequenceModel, Prediction, batch_tensors, label_tensor, MALICIOUS_CLASS
from .encoder import ModelConfig, SequenceClassifier
from .surrogate import MeanPoolClassifier
from .trainer import TrainConfig, EvalMetrics, Trainer, train, evaluate, loss_and_grad, split_corpus
from .checkpoint import save_params, load_params, save_model, load_model
