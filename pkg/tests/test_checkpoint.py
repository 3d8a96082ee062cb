import pytest
import torch

from deshadow_oct.core.checkpoint import (
    MAGIC,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    read_meta,
    save_checkpoint,
)
from deshadow_oct.error.exceptions import CheckpointError


@pytest.fixture
def state():
    torch.manual_seed(0)
    return {
        "meta": {"config_hash": "abc", "next_position": 3, "stopped_early": False},
        "weights": {"conv.weight": torch.randn(4, 1, 3, 3), "conv.bias": torch.zeros(4)},
        "opt": {
            "state": {0: {"step": torch.tensor(7.0), "exp_avg": torch.randn(4)}},
            "param_groups": [
                {"lr": 2.5e-6, "betas": (0.9, 0.999), "params": [0], "foreach": None}
            ],
        },
        "flags": torch.tensor([True, False, True]),
        "counts": torch.arange(5, dtype=torch.int64),
        "empty": torch.empty(0, 3),
    }


def test_decode_restores_values(state):
    out = decode_checkpoint(encode_checkpoint(state))
    assert out["meta"] == state["meta"]
    assert torch.equal(out["weights"]["conv.weight"], state["weights"]["conv.weight"])
    assert list(out["opt"]["state"]) == [0]
    assert torch.equal(out["opt"]["state"][0]["exp_avg"], state["opt"]["state"][0]["exp_avg"])
    assert out["opt"]["param_groups"][0]["lr"] == 2.5e-6
    assert out["flags"].dtype is torch.bool
    assert torch.equal(out["flags"], state["flags"])
    assert torch.equal(out["counts"], state["counts"])
    assert out["empty"].shape == (0, 3)


def test_encoding_is_byte_stable(state):
    first = encode_checkpoint(state)
    assert encode_checkpoint(decode_checkpoint(first)) == first


def test_save_load_save(tmp_path, state):
    save_checkpoint(tmp_path / "a.ckpt", state)
    save_checkpoint(tmp_path / "b.ckpt", load_checkpoint(tmp_path / "a.ckpt"))
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()
    assert not (tmp_path / "a.ckpt.tmp").exists()


def test_read_meta(tmp_path, state):
    save_checkpoint(tmp_path / "a.ckpt", state)
    assert read_meta(tmp_path / "a.ckpt") == state["meta"]


def test_bad_magic(state):
    data = bytearray(encode_checkpoint(state))
    data[: len(MAGIC)] = b"NOTACKPT"
    with pytest.raises(CheckpointError, match="not a deshadow-oct checkpoint"):
        decode_checkpoint(bytes(data))


def test_corrupt_payload(state):
    data = bytearray(encode_checkpoint(state))
    data[-1] ^= 0xFF
    with pytest.raises(CheckpointError, match="checksum"):
        decode_checkpoint(bytes(data))


def test_truncated(state):
    data = encode_checkpoint(state)
    with pytest.raises(CheckpointError):
        decode_checkpoint(data[:30])
    with pytest.raises(CheckpointError):
        decode_checkpoint(data[:-10])


def test_unsupported_object():
    with pytest.raises(CheckpointError, match="Cannot store"):
        encode_checkpoint({"x": object()})


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_checkpoint(tmp_path / "missing.ckpt")
