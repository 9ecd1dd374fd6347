import pytest
from pydantic import ValidationError

from app.actions.configurations import (
    PrepareConfig,
    RunConfig,
    SynthConfig,
    SyntheticSpec,
    TrainConfig,
    flat_value,
    format_config,
    preset_values,
    read_config_file,
    resolve_values,
)
from app.model import AblationMask, GroupingMode
from app.services.errors import ConfigurationNotFound, ConfigurationValidationError


SYNTH_FLAT = {
    "synth_users": "20",
    "synth_items": "30",
    "synth_entities": "50",
    "synth_relations": "3",
    "synth_interactions_per_user": "6",
    "synth_kg_edges_per_item": "2",
    "synth_clusters": "3",
}


def test_preset_uses_model_field_names():
    values = preset_values("lfm-1b")

    assert values["dim"] == 64
    assert values["n_queries"] == 6
    assert values["l2"] == 1e-6
    assert "d" not in values


@pytest.mark.parametrize("name, row", [
    ("lfm-1b", (2, 64, 1, 32, 64, 1e-6, 6)),
    ("movielens-1m", (1, 32, 2, 32, 32, 1e-5, 4)),
    ("amazon-book", (2, 8, 3, 32, 64, 1e-5, 4)),
    ("synthetic", (1, 8, 1, 8, 16, 1e-5, 2)),
])
def test_preset_rows_survive_a_config_file(tmp_path, name, row):
    config = TrainConfig.from_flat({**SYNTH_FLAT, **resolve_values({"preset": name})})
    path = tmp_path / "run.cfg"
    path.write_text(format_config(config.to_flat()))

    loaded = TrainConfig.from_flat(read_config_file(path))

    hyper = loaded.hyper
    assert (hyper.l_u, hyper.n_u, hyper.l_v, hyper.n_v, hyper.dim, hyper.l2, hyper.n_queries) == row
    assert loaded.preset == name
    assert loaded == config


def test_synthetic_preset_sets_the_training_recipe():
    hyper = TrainConfig.from_flat({**SYNTH_FLAT, **resolve_values({"preset": "synthetic"})}).hyper

    assert (hyper.learning_rate, hyper.batch_size, hyper.epochs) == (1e-2, 256, 30)


def test_unknown_preset():
    with pytest.raises(ConfigurationNotFound):
        preset_values("netflix")


def test_config_file_skips_comments_and_blank_lines(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("DKSE-CONFIG v1\n# tuned on validation\n\ndim = 32\nmask=w/o R\n")

    assert read_config_file(path) == {"dim": "32", "mask": "w/o R"}


@pytest.mark.parametrize("body, reason", [
    ("dim=32\ndim=16\n", "3: duplicate key 'dim'"),
    ("dim\n", "2: expected 'key=value'"),
    ("=32\n", "2: expected 'key=value'"),
])
def test_config_file_errors_name_the_line(tmp_path, body, reason):
    path = tmp_path / "run.cfg"
    path.write_text("DKSE-CONFIG v1\n" + body)

    with pytest.raises(ConfigurationValidationError) as excinfo:
        read_config_file(path)

    assert str(excinfo.value).endswith(reason)


def test_none_flags_do_not_override(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(format_config({"epochs": "7", "preset": "amazon-book"}))

    values = resolve_values({"epochs": None, "n_u": 4}, path)

    assert values["epochs"] == "7"
    assert values["n_u"] == 4
    # Preset named in the file still applies
    assert values["l_v"] == 3
    assert values["preset"] == "amazon-book"


def test_flat_keys_are_nested():
    config = TrainConfig.from_flat({**SYNTH_FLAT, "dim": "8", "mask": "w/o U/V,H", "grouping": "vertical"})

    assert config.hyper.dim == 8
    assert config.hyper.grouping == GroupingMode.VERTICAL
    assert config.hyper.mask == AblationMask(include_user_item=False, include_head=False)
    assert config.synthetic.clusters == 3


def test_flat_round_trip(tmp_path):
    config = TrainConfig.from_flat({
        **SYNTH_FLAT,
        "mask": "w/o T",
        "l2": 1e-6,
        "use_contrastive": False,
        "k_grid": "10,1,5",
        "ratios": "0.8,0.1,0.1",
        "policy": "threshold",
        "out": str(tmp_path / "run"),
    })
    path = tmp_path / "run.cfg"
    path.write_text(format_config(config.to_flat()))

    assert TrainConfig.from_flat(read_config_file(path)) == config


def test_text_lists_are_parsed():
    config = TrainConfig.from_flat({**SYNTH_FLAT, "k_grid": "10,1,5,5", "ratios": "0.8,0.1,0.1"})

    assert config.k_grid == [1, 5, 10]
    assert config.ratios == (0.8, 0.1, 0.1)


@pytest.mark.parametrize("values", [
    {"preset": "netflix"},
    {"k_grid": "0,5"},
    {"tau": "0"},
    {"unknown_key": "1"},
])
def test_invalid_values_are_rejected(values):
    with pytest.raises(ValidationError):
        TrainConfig.from_flat({**SYNTH_FLAT, **values})


def test_input_paths_must_exist(tmp_path):
    with pytest.raises(ValidationError) as excinfo:
        TrainConfig.from_flat({"interactions": str(tmp_path / "absent.tsv")})

    assert "does not exist" in str(excinfo.value)


def test_training_needs_a_source():
    with pytest.raises(ValidationError):
        TrainConfig.from_flat({"epochs": "1"})


def test_prepare_needs_raw_input(tmp_path):
    with pytest.raises(ValidationError):
        PrepareConfig.from_flat({"dataset": str(tmp_path)})


def test_k_core_defaults(tmp_path):
    ratings = tmp_path / "ratings.tsv"
    ratings.write_text("u1\ti1\n")

    assert TrainConfig.from_flat(SYNTH_FLAT).effective_k_core == 1
    assert TrainConfig.from_flat({"interactions": str(ratings)}).effective_k_core == 20
    assert TrainConfig.from_flat({"interactions": str(ratings), "k_core": "5"}).effective_k_core == 5


def test_seed_flag_seeds_the_generator():
    config = SynthConfig.from_flat({**SYNTH_FLAT, "seed": 11})

    assert config.synthetic.seed == 11
    assert config.synthetic.items == 30


def test_synthetic_counts_must_fit_together():
    with pytest.raises(ValidationError):
        SyntheticSpec(items=10, interactions_per_user=20)
    with pytest.raises(ValidationError):
        SyntheticSpec(items=30, entities=35, clusters=3, kg_edges_per_item=2)


def test_seed_lives_in_the_hyper_parameters():
    config = RunConfig.from_flat({**SYNTH_FLAT, "seed": "17"})

    assert config.seed == config.hyper.seed == 17


@pytest.mark.parametrize("value, text", [
    (True, "true"),
    (1e-5, "1e-05"),
    ([1, 5, 10], "1,5,10"),
    (GroupingMode.BASE, "base"),
    (AblationMask.without("R"), "w/o R"),
])
def test_flat_value(value, text):
    assert flat_value(value) == text
