"""Seed derivation and global RNG control."""

import random

import numpy as np
import torch


def derive_seed(*entropy: int) -> int:
    """Deterministic 32-bit seed from a tuple of non-negative integers."""
    return int(np.random.SeedSequence([int(e) for e in entropy]).generate_state(1)[0])


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


def enable_determinism() -> None:
    """Prefer deterministic kernels; non-deterministic ones only warn."""
    torch.use_deterministic_algorithms(True, warn_only=True)
    torch.backends.cudnn.benchmark = False


def rng_state() -> dict:
    """Snapshot of the python, numpy and torch CPU generators."""
    np_state = np.random.get_state()
    return {
        "python": list(random.getstate()[1]),
        "python_pos": random.getstate()[2],
        "numpy_keys": torch.from_numpy(np_state[1].astype(np.int64)),
        "numpy_pos": int(np_state[2]),
        "torch": torch.random.get_rng_state(),
    }


def set_rng_state(state: dict) -> None:
    random.setstate((3, tuple(int(v) for v in state["python"]), state["python_pos"]))
    np_keys = np.asarray(state["numpy_keys"].numpy(), dtype=np.uint32)
    np.random.set_state(("MT19937", np_keys, int(state["numpy_pos"]), 0, 0.0))
    torch.random.set_rng_state(state["torch"])
