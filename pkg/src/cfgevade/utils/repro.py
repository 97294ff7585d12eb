import hashlib
import logging
import os
import random
import sys
from typing import Any, Dict

import numpy as np
import torch

logger = logging.getLogger(__name__)


def derive_seed(seed: int, *labels: Any) -> int:
    """
    Derives an independent 64-bit seed from the global seed and a label path,
    e.g. derive_seed(seed, "corpus", 17) or derive_seed(seed, "attack", trial, k).
    The derivation depends only on the labels, never on call order.
    """
    key = ":".join([str(int(seed))] + [str(label) for label in labels]).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def make_rng(seed: int, *labels: Any) -> np.random.Generator:
    """numpy Generator on the labelled stream."""
    return np.random.default_rng(derive_seed(seed, *labels))


def seed_everything(seed: int = 42):
    """
    Sets the random seed for Python, NumPy, and PyTorch
    and switches torch into deterministic single-threaded kernels.
    """
    random.seed(seed)
    os.environ['PYTHONHASHSEED'] = str(seed)
    np.random.seed(derive_seed(seed, "numpy") % (2 ** 32))
    torch.manual_seed(derive_seed(seed, "torch"))
    torch.use_deterministic_algorithms(True)
    # worker pools provide the parallelism; kernels stay single-threaded
    torch.set_num_threads(1)

    logger.debug("Global seed set to %d", seed)


def log_env() -> Dict[str, str]:
    """
    Logs critical environment versions to ensure reproducibility of the environment.
    """
    import networkx

    env_info = {
        "python": sys.version.split()[0],
        "torch": torch.__version__,
        "numpy": np.__version__,
        "networkx": networkx.__version__,
    }

    logger.info("Environment: %s", env_info)
    return env_info
