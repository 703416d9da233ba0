import numpy as np
import pytest

from trine.cli import RunConfig, dump_config, main, parse_config, read_config_file
from trine.graph import load_edge_list


def run_cli(*args):
    return main(list(args))


@pytest.fixture
def six_node_edges(tmp_path):
    path = tmp_path / "six.txt"
    path.write_text(
        "u0 p0 1.0\nu0 p1 1.0\nu1 p0 2.0\np0 c0 1.0\np1 c1 1.0\nu0 c0 1.0\nu1 c1 1.0\n"
    )
    return path


@pytest.fixture
def synth_edges(tmp_path):
    path = tmp_path / "synth.txt"
    code = run_cli("synth", "--users", "30", "--tags", "12", "--items", "9",
                   "--communities", "3", "--p-in", "0.5", "--p-out", "0.05",
                   "--seed", "5", "--out", str(path), "--quiet")
    assert code == 0
    return path


class TestParseConfig:
    def test_defaults(self):
        sub, cfg, meta = parse_config(["train"])
        assert sub == "train"
        assert cfg.dim == 128
        assert cfg.metapath == ("upcpu", "cpupc")
        assert cfg.edges is None

    def test_flag_overrides_file(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("dim = 64\nwindow = 3\n")
        _, cfg, _ = parse_config(["train", "--config", str(conf), "--dim", "128"])
        assert cfg.dim == 128   # flag wins
        assert cfg.window == 3  # file wins over default

    def test_unknown_key_rejected(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("dimension = 64\n")
        with pytest.raises(Exception, match="unknown config key"):
            parse_config(["train", "--config", str(conf)])

    def test_bad_value_rejected(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("dim = lots\n")
        with pytest.raises(Exception, match="bad value"):
            parse_config(["train", "--config", str(conf)])

    def test_comments_and_blanks(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("# comment\n\nseed = 9  # trailing comment\n")
        assert read_config_file(conf) == {"seed": 9}

    def test_config_round_trip(self, tmp_path):
        cfg = RunConfig(dim=48, metapath=("upu", "cpc"), walk_scale=None,
                        lr=0.0125, lr_decay=True, edges="graph.txt", seed=33)
        conf = tmp_path / "dump.conf"
        conf.write_text(dump_config(cfg))
        reparsed = RunConfig(**read_config_file(conf))
        assert reparsed == cfg

    def test_metapath_repeatable_flag(self):
        _, cfg, _ = parse_config(["walks", "--metapath", "upu", "--metapath", "cpc"])
        assert cfg.metapath == ("upu", "cpc")


class TestSubcommands:
    def test_train_without_edges_is_usage_error(self, capsys):
        assert run_cli("train", "--out", "x.txt", "--quiet") == 2
        assert "missing required option --edges" in capsys.readouterr().err

    def test_unknown_flag_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            run_cli("train", "--no-such-flag")
        assert exc.value.code == 2

    def test_train_writes_embeddings(self, six_node_edges, tmp_path):
        out = tmp_path / "emb.txt"
        code = run_cli("train", "--edges", str(six_node_edges), "--out", str(out),
                       "--dim", "5", "--epochs", "2", "--walk-length", "4",
                       "--max-walks", "1", "--seed", "3", "--quiet")
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "6 5"
        assert len(lines) == 7
        assert all(len(line.split()) == 6 for line in lines[1:])
        assert (tmp_path / "emb.txt.ctx").exists()

    def test_train_determinism_byte_identical(self, six_node_edges, tmp_path):
        outs = []
        for name in ("a.txt", "b.txt"):
            out = tmp_path / name
            run_cli("train", "--edges", str(six_node_edges), "--out", str(out),
                    "--dim", "4", "--epochs", "2", "--walk-length", "4",
                    "--max-walks", "2", "--seed", "11", "--quiet")
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_walks_output(self, six_node_edges, tmp_path):
        out = tmp_path / "walks.txt"
        code = run_cli("walks", "--edges", str(six_node_edges), "--out", str(out),
                       "--walk-length", "5", "--max-walks", "2", "--seed", "2", "--quiet")
        assert code == 0
        g = load_edge_list(six_node_edges)
        for line in out.read_text().splitlines():
            labels = line.split()
            assert all(g.node_of(lab) for lab in labels)
        run2 = tmp_path / "walks2.txt"
        run_cli("walks", "--edges", str(six_node_edges), "--out", str(run2),
                "--walk-length", "5", "--max-walks", "2", "--seed", "2", "--quiet")
        assert out.read_bytes() == run2.read_bytes()

    def test_hits_output_sorted(self, six_node_edges, tmp_path, capsys):
        code = run_cli("hits", "--edges", str(six_node_edges), "--quiet")
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 6
        scores = [float(line.split()[1]) for line in lines]
        assert scores == sorted(scores, reverse=True)

    def test_synth_and_ingest(self, synth_edges):
        g = load_edge_list(synth_edges)
        assert g.counts == (30, 12, 9)
        assert g.num_edges > 0
        assert g.validate().ok

    def test_synth_determinism(self, tmp_path):
        paths = []
        for name in ("s1.txt", "s2.txt"):
            p = tmp_path / name
            run_cli("synth", "--users", "20", "--tags", "8", "--items", "6",
                    "--seed", "4", "--out", str(p), "--quiet")
            paths.append(p.read_bytes())
        assert paths[0] == paths[1]

    def test_evaluate_from_file(self, synth_edges, tmp_path, capsys):
        emb = tmp_path / "emb.txt"
        assert run_cli("train", "--edges", str(synth_edges), "--out", str(emb),
                       "--dim", "6", "--epochs", "2", "--walk-length", "6",
                       "--max-walks", "1", "--seed", "8", "--quiet") == 0
        report = tmp_path / "report.txt"
        code = run_cli("evaluate", "--edges", str(synth_edges), "--embeddings", str(emb),
                       "--relation", "13", "--folds", "3", "--seed", "2",
                       "--report", str(report), "--quiet")
        assert code == 0
        out = capsys.readouterr().out
        assert "mean" in out
        keys = dict(line.split(" = ") for line in report.read_text().splitlines())
        assert keys["folds"] == "3"
        assert 0.0 <= float(keys["mean_auc_roc"]) <= 1.0

    def test_e2e_deterministic_report(self, synth_edges, tmp_path):
        reports = []
        for name in ("r1.txt", "r2.txt"):
            rp = tmp_path / name
            code = run_cli("e2e", "--edges", str(synth_edges), "--relation", "13",
                           "--folds", "3", "--dim", "4", "--epochs", "1",
                           "--walk-length", "4", "--max-walks", "1",
                           "--seed", "7", "--report", str(rp), "--quiet")
            assert code == 0
            reports.append(rp.read_bytes())
        assert reports[0] == reports[1]

    def test_save_config_reparses_equal(self, tmp_path):
        conf = tmp_path / "eff.conf"
        assert run_cli("synth", "--users", "5", "--tags", "4", "--items", "3",
                       "--out", str(tmp_path / "g.txt"), "--seed", "2",
                       "--save-config", str(conf), "--quiet") == 0
        _, cfg_again, _ = parse_config(["synth", "--config", str(conf)])
        assert cfg_again.users == 5 and cfg_again.tags == 4 and cfg_again.items == 3
        assert cfg_again.seed == 2

    def test_missing_edge_file_fails_cleanly(self, tmp_path, capsys):
        code = run_cli("hits", "--edges", str(tmp_path / "nope.txt"), "--quiet")
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_bad_type_chars(self, six_node_edges, capsys):
        code = run_cli("hits", "--edges", str(six_node_edges), "--type-chars", "up", "--quiet")
        assert code == 2
