import json
from pathlib import Path

import pytest

from singular_mass_lab.cli.config import parse_config, parse_config_text, to_toml
from singular_mass_lab.cli.parser import parse_cli_arguments
from singular_mass_lab.cli.progress import CLIProgressReporter
from singular_mass_lab.cli.runner import run
from singular_mass_lab.errors import ConfigError
from singular_mass_lab.main import main

MINIMAL = """
[grid]
half_width = 4.0
n = 512

[coefficient]
spec = "background=1.0; delta(center=0.0, weight=1.0)"
"""

SMALL_ENERGY = """
[grid]
half_width = 4.0
n = 64

[coefficient]
spec = "background=1.0; delta(center=0.0, weight=1.0)"

[stepper]
T = 0.05

[campaign]
name = "{campaign}"
epsilon = 0.5

[output]
jobs = 1
"""


class TestConfig:
    def test_defaults(self):
        config = parse_config_text(MINIMAL)
        assert config.grid.d == 1 and config.grid.n == 512
        assert (config.eps0, config.ratio, config.count) == (0.5, 0.5, 5)
        assert config.stepper.dt is None and config.stepper.T == 1.0
        assert config.stepper.tolerance == 1e-10
        assert config.epsilon == config.ladder.smallest == 0.03125
        assert config.output_dir == Path("reports")
        assert config.mollifier == "bump" and config.second_mollifier == "polynomial"

    def test_all_skips_consistency_for_singular_g(self):
        config = parse_config_text(MINIMAL)
        assert config.campaigns() == ["energy", "moderateness", "uniqueness", "duhamel", "h2bound"]
        regular = parse_config_text(MINIMAL.replace("delta(center=0.0, weight=1.0)", "bump(center=0.0, width=1.0, height=1.0)"))
        assert "consistency" in regular.campaigns()

    def test_consistency_rejects_singular_g(self):
        with pytest.raises(ConfigError, match="regular coefficient") as info:
            parse_config_text(MINIMAL + '\n[campaign]\nname = "consistency"\n')
        assert info.value.key == "coefficient.spec"

    def test_toml_round_trip(self):
        config = parse_config_text(MINIMAL + '\n[stepper]\ndt = 0.001\nT = 0.5\n[output]\nplots = true\n')
        assert parse_config_text(to_toml(config)) == config

    @pytest.mark.parametrize(
        "extra, key",
        [
            ("\n[stepper]\nsteps = 3\n", "stepper"),
            ('\n[campaign]\nname = "speed"\n', "campaign.name"),
            ("\n[campaign]\nrefinement = 3\n", "campaign.refinement"),
            ("\n[campaign]\nhalvings = 1\n", "campaign.halvings"),
            ('\n[stepper]\ndt = "fast"\n', "stepper.dt"),
            ("\n[output]\njobs = -2\n", "output.jobs"),
            ("\n[ladder]\ncount = 7\n", "ladder"),
        ],
    )
    def test_invalid_values_name_their_key(self, extra, key):
        with pytest.raises(ConfigError) as info:
            parse_config_text(MINIMAL + extra)
        assert info.value.key == key

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown section"):
            parse_config_text(MINIMAL + "\n[plotting]\nstyle = 1\n")

    def test_missing_sections(self):
        with pytest.raises(ConfigError) as info:
            parse_config_text('[coefficient]\nspec = "background=1.0"\n')
        assert info.value.key == "grid"

    def test_syntax_error_reports_line(self):
        with pytest.raises(ConfigError, match="line 3"):
            parse_config_text("[grid]\nn = 64\nhalf_width = = 2\n")

    def test_sampled_paths_resolve_next_to_the_document(self, write_config, tmp_path):
        rows = "".join(f"{i},{v}\n" for i, v in enumerate([0, 0, 1, 2, 2, 1, 0, 0]))
        (tmp_path / "g.csv").write_text("# d=1, half_width=4.0, n=8\ni,value\n" + rows)
        path = write_config(MINIMAL.replace('spec = "background=1.0; delta(center=0.0, weight=1.0)"', "spec = 'background=1.0; sampled(path=\"g.csv\")'"))
        assert parse_config(path).coefficient.is_regular

    def test_overrides(self):
        config = parse_config_text(MINIMAL).with_overrides(campaign="energy", output_dir=Path("x"), jobs=1)
        assert (config.campaign, config.output_dir, config.jobs) == ("energy", Path("x"), 1)
        with pytest.raises(ConfigError):
            config.with_overrides(campaign="consistency")


class TestParser:
    def test_run_arguments(self, write_config):
        path = write_config(MINIMAL)
        args = parse_cli_arguments(["run", str(path), "--campaign", "energy", "--jobs", "2"])
        assert (args.config, args.campaign, args.jobs) == (path, "energy", 2)

    @pytest.mark.parametrize(
        "argv",
        [
            ["run", "{path}", "--campaign", "speed"],
            ["run", "{path}", "--verbose", "--quiet"],
            ["run", "{path}", "--jobs", "-1"],
            ["run", "missing.toml"],
            [],
        ],
    )
    def test_usage_errors_exit_2(self, write_config, argv):
        path = write_config(MINIMAL)
        with pytest.raises(SystemExit) as info:
            parse_cli_arguments([a.format(path=path) for a in argv])
        assert info.value.code == 2

    def test_campaigns_listing(self, capsys):
        with pytest.raises(SystemExit) as info:
            parse_cli_arguments(["campaigns"])
        assert info.value.code == 0
        assert "h2bound" in capsys.readouterr().out


class TestRunner:
    def test_energy_campaign_writes_reports(self, write_config, tmp_path, capsys):
        out = tmp_path / "reports"
        config = parse_config(write_config(SMALL_ENERGY.format(campaign="energy"))).with_overrides(output_dir=out)
        assert run(config, CLIProgressReporter(quiet=True)) == 0
        assert sorted(p.name for p in out.iterdir()) == ["energy.csv", "energy.meta.json", "energy_final.csv"]
        meta = json.loads((out / "energy.meta.json").read_text())
        assert meta["campaign"] == "energy" and meta["epsilon"] == 0.5
        assert meta["max_drift"] <= 1e-10
        assert "[grid]" in meta["config_toml"]
        assert capsys.readouterr().out.startswith("energy: ok")

    def test_energy_campaign_writes_strided_snapshots(self, write_config, tmp_path):
        out = tmp_path / "reports"
        text = SMALL_ENERGY.format(campaign="energy").replace("T = 0.05", "T = 0.05\nsnapshot_stride = 2")
        assert run(parse_config(write_config(text)).with_overrides(output_dir=out), CLIProgressReporter(quiet=True)) == 0
        snapshots = json.loads((out / "energy.meta.json").read_text())["snapshots"]
        steps = [entry["step"] for entry in snapshots]
        assert steps[0] == 0 and len(steps) >= 3
        assert all(step % 2 == 0 for step in steps[:-1])
        written = sorted(p.name for p in out.glob("energy_snapshot_*.csv"))
        assert written == sorted(entry["file"] for entry in snapshots)
        assert (out / snapshots[-1]["file"]).read_bytes() == (out / "energy_final.csv").read_bytes()

    def test_failed_campaign_exits_1(self, write_config, tmp_path, capsys):
        # n=64 leaves no ladder scale resolvable on the n/4 grid
        config = parse_config(write_config(SMALL_ENERGY.format(campaign="h2bound"))).with_overrides(
            output_dir=tmp_path / "out"
        )
        assert run(config, CLIProgressReporter(quiet=True)) == 1
        assert "h2bound: FAILED" in capsys.readouterr().out

    def test_reruns_are_byte_identical(self, write_config, tmp_path):
        path = write_config(SMALL_ENERGY.format(campaign="energy"))
        for name in ("one", "two"):
            run(parse_config(path).with_overrides(output_dir=tmp_path / name), CLIProgressReporter(quiet=True))
        for name in ("energy.csv", "energy_final.csv"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


class TestMain:
    def test_config_error_exits_2(self, write_config, capsys):
        path = write_config(MINIMAL + "\n[plotting]\nstyle = 1\n")
        assert main(["run", str(path), "-q"]) == 2
        assert "unknown section" in capsys.readouterr().err

    def test_run(self, write_config, tmp_path):
        path = write_config(SMALL_ENERGY.format(campaign="energy"))
        assert main(["run", str(path), "--out", str(tmp_path / "r"), "-q"]) == 0
        assert (tmp_path / "r" / "energy.csv").exists()
