import pytest
import yaml

from flo_mitigate.cli import build_parser, main, resolve_config
from flo_mitigate.config import EXPERIMENTS, ExperimentConfig, default_config


@pytest.mark.parametrize("experiment", EXPERIMENTS)
def test_defaults_are_valid(experiment):
    cfg = default_config(experiment)
    assert cfg.experiment == experiment
    assert all(line.startswith("# ") for line in cfg.header_lines())


def test_experiment_defaults_merge_under_file(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({"experiment": "heatmap", "shots": 123}))
    cfg = ExperimentConfig.load(path)
    assert (cfg.nx, cfg.ny, cfg.shots, cfg.postselect) == (2, 1, 123, False)


def test_rejects_bad_configs(tmp_path):
    with pytest.raises(ValueError):
        ExperimentConfig.from_mapping({"experiment": "vqe", "bogus": 1})
    with pytest.raises(ValueError):
        ExperimentConfig.from_mapping({"shots": 1})
    with pytest.raises(ValueError):
        default_config("vqe", noise_rates=(1.5,))
    with pytest.raises(ValueError):
        default_config("vqe", training_points=1)
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="nope")
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({"experiment": "vqe"}))
    with pytest.raises(ValueError):
        ExperimentConfig.load(path, "scatter")
    path.write_text("- a\n- b\n")
    with pytest.raises(ValueError):
        ExperimentConfig.load(path)


def test_paper_scale():
    assert default_config("vqe").paper_scale().iterations == 1000
    assert default_config("scatter").paper_scale().generic_points == 90
    assert default_config("heatmap").paper_scale() == default_config("heatmap")


def test_cli_overrides(tmp_path):
    args = build_parser().parse_args(["vqe", "--seed", "5", "--out", str(tmp_path), "--paper-scale"])
    cfg = resolve_config(args)
    assert (cfg.seed, cfg.out, cfg.iterations) == (5, str(tmp_path), 1000)


def test_cli_reports_bad_config(tmp_path, capsys):
    assert main(["vqe", "--config", str(tmp_path / "missing.yaml")]) == 2
    assert "flo-mitigate:" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        build_parser().parse_args(["dance"])


SHIPPED = {
    "scatter.yaml": "scatter",
    "vqe.yaml": "vqe",
    "heatmap.yaml": "heatmap",
    "heatmap_global.yaml": "heatmap",
    "flo_check.yaml": "flo-check",
}


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_shipped_configs_load(name):
    from pathlib import Path

    path = Path(__file__).resolve().parent.parent / "configs" / name
    cfg = ExperimentConfig.load(path, SHIPPED[name])
    assert cfg.experiment == SHIPPED[name]
    if name != "heatmap_global.yaml":
        # numbers match the built-in desk-scale defaults; only out may differ
        assert cfg.with_overrides(out="x") == default_config(SHIPPED[name], out="x")
