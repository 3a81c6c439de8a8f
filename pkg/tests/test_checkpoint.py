"""Checkpoint container: bit-exact round-trips and shape verification."""

import numpy as np
import pytest
import torch

from crowdnav.checkpoint import (
    CheckpointError,
    load_checkpoint,
    load_network_arrays,
    load_optimizer_arrays,
    network_arrays,
    optimizer_arrays,
    save_checkpoint,
)
from crowdnav.networks import AgentNetworks, NetworkWidths, init_networks
from crowdnav.training.updates import build_optimizers

WIDTHS = NetworkWidths(
    subgraph_hidden=8, gnn_width=16, policy_hidden=(16,),
    critic_hidden=(16,), selection_hidden=(16,),
)


def sample_arrays():
    rng = np.random.default_rng(0)
    return {
        "a.weight": rng.normal(size=(4, 3)),
        "b.bias": rng.normal(size=(7,)).astype(np.float32),
        "c.flag": np.array([1, 0, 1], dtype=np.uint8),
        "d.empty": np.empty((0, 2)),
    }


def test_round_trip_values(tmp_path):
    path = tmp_path / "x.ckpt"
    arrays = sample_arrays()
    manifest = {"note": "hello", "nested": {"k": [1, 2, 3]}}
    save_checkpoint(path, arrays, manifest)
    loaded, loaded_manifest = load_checkpoint(path)
    assert loaded_manifest == manifest
    assert set(loaded) == set(arrays)
    for name in arrays:
        assert loaded[name].dtype == arrays[name].dtype
        np.testing.assert_array_equal(loaded[name], arrays[name])


def test_save_load_save_identical_bytes(tmp_path):
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(p1, sample_arrays(), {"round": 1})
    arrays, manifest = load_checkpoint(p1)
    save_checkpoint(p2, arrays, manifest)
    assert p1.read_bytes() == p2.read_bytes()


def test_corrupt_file_rejected(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"not a checkpoint at all")
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_truncated_body_rejected(tmp_path):
    path = tmp_path / "t.ckpt"
    save_checkpoint(path, sample_arrays(), {})
    blob = path.read_bytes()
    path.write_bytes(blob[:-8])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)


def test_network_round_trip_exact(tmp_path):
    gen = torch.Generator()
    gen.manual_seed(0)
    nets = init_networks(AgentNetworks(WIDTHS), gen)
    path = tmp_path / "net.ckpt"
    save_checkpoint(path, network_arrays(nets), {})
    arrays, _ = load_checkpoint(path)

    gen2 = torch.Generator()
    gen2.manual_seed(1)
    other = init_networks(AgentNetworks(WIDTHS), gen2)
    load_network_arrays(other, arrays)
    for (n1, p1), (n2, p2) in zip(nets.named_parameters(), other.named_parameters()):
        assert n1 == n2
        assert torch.equal(p1, p2)


def test_width_mismatch_names_parameter(tmp_path):
    gen = torch.Generator()
    gen.manual_seed(0)
    nets = init_networks(AgentNetworks(WIDTHS), gen)
    path = tmp_path / "net.ckpt"
    save_checkpoint(path, network_arrays(nets), {})
    arrays, _ = load_checkpoint(path)

    wide = AgentNetworks(NetworkWidths(
        subgraph_hidden=8, gnn_width=16, policy_hidden=(32,),
        critic_hidden=(16,), selection_hidden=(16,),
    ))
    with pytest.raises(CheckpointError, match="policy.net.0.weight"):
        load_network_arrays(wide, arrays)


def test_missing_parameter_rejected(tmp_path):
    gen = torch.Generator()
    gen.manual_seed(0)
    nets = init_networks(AgentNetworks(WIDTHS), gen)
    arrays = network_arrays(nets)
    del arrays["param.policy.net.0.bias"]
    with pytest.raises(CheckpointError, match="policy.net.0.bias"):
        load_network_arrays(nets, arrays)


def test_optimizer_state_round_trip(tmp_path):
    gen = torch.Generator()
    gen.manual_seed(0)
    nets = init_networks(AgentNetworks(WIDTHS), gen)
    opts = build_optimizers(nets, 1e-3, 3e-4)
    # Materialise some Adam state.
    feature = torch.randn(4, nets.feature_width, dtype=torch.float64)
    action = torch.randn(4, 2, dtype=torch.float64) * 0.1
    loss = nets.q_value(feature, action, which="online-min").sum()
    nets.zero_grad()
    loss.backward()
    opts.critic.step()

    arrays = optimizer_arrays(opts.critic, opts.named["critic"], "opt.critic.")
    assert arrays, "optimizer state should not be empty after a step"

    nets2 = init_networks(AgentNetworks(WIDTHS), gen)
    load_network_arrays(nets2, network_arrays(nets))
    opts2 = build_optimizers(nets2, 1e-3, 3e-4)
    load_optimizer_arrays(opts2.critic, opts2.named["critic"], "opt.critic.", arrays)
    again = optimizer_arrays(opts2.critic, opts2.named["critic"], "opt.critic.")
    assert set(again) == set(arrays)
    for key in arrays:
        np.testing.assert_array_equal(again[key], arrays[key])
