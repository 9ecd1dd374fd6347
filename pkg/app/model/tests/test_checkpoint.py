import pytest

from app import settings
from app.model import check_compatible, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from app.services.errors import CheckpointFormatError, CheckpointMismatchError


def test_round_trip_is_bit_exact(tmp_path, make_params):
    params = make_params(dim=8, n_queries=3, seed=11)

    save_checkpoint(tmp_path, params, hyper={"dim": 8, "l2": 1e-6}, seed=11)
    loaded, metadata = load_checkpoint(tmp_path / settings.CHECKPOINT_FILENAME)

    assert loaded.equals(params)
    assert metadata["seed"] == 11
    assert metadata["hyperparams"] == {"dim": 8, "l2": 1e-6}


def test_encoding_is_deterministic(make_params):
    params = make_params(seed=4)

    assert encode_checkpoint(params, seed=4) == encode_checkpoint(params.copy(), seed=4)


def test_checkpoint_starts_with_format_tag(make_params):
    data = encode_checkpoint(make_params())

    assert data.startswith(b"DKSE-CKPT v1\n")


def test_wrong_tag_is_rejected(make_params):
    data = encode_checkpoint(make_params()).replace(b"DKSE-CKPT v1", b"DKSE-CKPT v9", 1)

    with pytest.raises(CheckpointFormatError):
        decode_checkpoint(data)


def test_truncated_checkpoint_is_rejected(make_params):
    data = encode_checkpoint(make_params())

    with pytest.raises(CheckpointFormatError):
        decode_checkpoint(data[:-5])


def test_missing_checkpoint_is_rejected(tmp_path):
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(tmp_path / "absent.ckpt")


def test_dimension_mismatch_is_rejected(make_params):
    params = make_params(dim=8, n_queries=2)

    check_compatible(params, params.node_count, params.relation_count, 8, 2)
    with pytest.raises(CheckpointMismatchError):
        check_compatible(params, params.node_count, params.relation_count, 16, 2)
