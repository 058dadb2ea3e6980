import numpy as np
import pytest

from xhembed.cli import (CONFIG_KEYS, ValidationError, load_config, main,
                         run_pipeline)
from xhembed.combine import InitStrategy


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestConfig:
    def test_defaults_returned(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, ""))
        assert cfg["train.batch"] == 64
        assert cfg["nmt.hidden"] == 128
        assert cfg["data.bible_src"] is None

    def test_comments_and_blanks_skipped(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, "# hello\n\ntrain.epochs=3\n"))
        assert cfg["train.epochs"] == 3

    def test_unknown_key_reports_line(self, tmp_path):
        with pytest.raises(ValidationError, match=":2:.*nope"):
            load_config(write_cfg(tmp_path, "train.epochs=3\nnope=1\n"))

    def test_bad_value_type(self, tmp_path):
        with pytest.raises(ValidationError, match="train.epochs"):
            load_config(write_cfg(tmp_path, "train.epochs=three\n"))

    def test_missing_equals(self, tmp_path):
        with pytest.raises(ValidationError):
            load_config(write_cfg(tmp_path, "just a line\n"))

    def test_every_key_has_type_and_default_slot(self):
        for key, (typ, _) in CONFIG_KEYS.items():
            assert typ in (str, int, float), key


class TestValidation:
    def base_cfg(self, tmp_path):
        cfg = {k: d for k, (_, d) in CONFIG_KEYS.items()}
        for key in ("data.bible_src", "data.bible_tgt", "data.corpus2_src",
                    "data.corpus2_tgt", "data.hr_embeddings"):
            p = tmp_path / key.split(".")[1]
            p.write_text("x\n")
            cfg[key] = str(p)
        (tmp_path / "hr_embeddings").write_text("x 1 0\n")
        return cfg

    def test_missing_required_path_named(self, tmp_path):
        cfg = {k: d for k, (_, d) in CONFIG_KEYS.items()}
        with pytest.raises(ValidationError, match="data.bible_src"):
            run_pipeline(cfg, tmp_path / "out", [InitStrategy.RANDOM])

    def test_lexicon_required_for_projection_strategies(self, tmp_path):
        cfg = self.base_cfg(tmp_path)
        for strat in (InitStrategy.XH_PRE, InitStrategy.VECMAP,
                      InitStrategy.XH_META):
            with pytest.raises(ValidationError, match="data.lexicon"):
                run_pipeline(cfg, tmp_path / "out", [strat])

    def test_nonexistent_data_path(self, tmp_path):
        cfg = self.base_cfg(tmp_path)
        cfg["data.bible_src"] = str(tmp_path / "missing.src")
        with pytest.raises(ValidationError, match="missing.src"):
            run_pipeline(cfg, tmp_path / "out", [InitStrategy.RANDOM])


class TestExitCodes:
    def test_validation_failure_is_one(self, tmp_path, capsys):
        rc = main(["neighbors", "--embeddings", str(tmp_path / "no.vec"),
                   "--word", "x"])
        assert rc == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_strategy_is_one(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "")
        rc = main(["run-all", "--config", str(cfg), "--strategies", "Bogus",
                   "--out", str(tmp_path / "out")])
        assert rc == 1

    def test_success_is_zero(self, tmp_path, capsys):
        p = tmp_path / "h.txt"
        p.write_text("a b c d\n")
        assert main(["evaluate", "--hyp", str(p), "--ref", str(p)]) == 0
        assert "100.0000" in capsys.readouterr().out


class TestSubcommands:
    def test_make_toy_writes_dataset_and_config(self, tmp_path, capsys):
        assert main(["make-toy", "--out", str(tmp_path)]) == 0
        for name in ("bible.src", "bible.tgt", "oxex.src", "oxex.tgt",
                     "lexicon.tsv", "hr.vec", "toy.cfg"):
            assert (tmp_path / name).exists(), name
        # the generated config must parse cleanly
        cfg = load_config(tmp_path / "toy.cfg")
        assert cfg["data.lexicon"].endswith("lexicon.tsv")

    def test_stats_output(self, tmp_path, capsys):
        (tmp_path / "a.src").write_text("one two\n")
        (tmp_path / "a.tgt").write_text("eins zwei\n")
        assert main(["stats", "--src", str(tmp_path / "a.src"),
                     "--tgt", str(tmp_path / "a.tgt")]) == 0
        out = capsys.readouterr().out
        assert "sentences\t1" in out and "src.mean_len\t2.0000" in out

    def test_neighbors_output(self, tmp_path, capsys):
        (tmp_path / "e.vec").write_text("a 1 0\nb 0 1\nc 1 0.1\n")
        assert main(["neighbors", "--embeddings", str(tmp_path / "e.vec"),
                     "--word", "a", "-k", "2"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("a\t1.0000")
        assert lines[1].startswith("c\t")

    def test_build_ev_subcommand(self, tmp_path, capsys):
        (tmp_path / "lex.tsv").write_text("indoda\tman\nghost\tzzz\n")
        (tmp_path / "hr.vec").write_text("man 3 4\n")
        assert main(["build-ev", "--lexicon", str(tmp_path / "lex.tsv"),
                     "--hr-embeddings", str(tmp_path / "hr.vec"),
                     "--out", str(tmp_path / "ev.vec")]) == 0
        assert "covered\t1" in capsys.readouterr().out
        assert (tmp_path / "ev.vec").read_text().splitlines()[1].startswith("indoda")


def micro_dataset(tmp_path):
    """Tiny deterministic corpus wired into a config for fast pipeline runs."""
    rng = np.random.default_rng(0)
    words = ["toza", "tozile", "meka", "mekile", "vusa", "vusile"]
    en = {"toza": "go", "tozile": "went", "meka": "see",
          "mekile": "saw", "vusa": "rise", "vusile": "rose"}
    with open(tmp_path / "b.src", "w") as fs, open(tmp_path / "b.tgt", "w") as ft:
        for _ in range(40):
            sent = [words[int(rng.integers(6))] for _ in range(3)]
            fs.write(" ".join(sent) + "\n")
            ft.write(" ".join(en[w] for w in sent) + "\n")
    with open(tmp_path / "c.src", "w") as fs, open(tmp_path / "c.tgt", "w") as ft:
        for _ in range(20):
            sent = [words[int(rng.integers(6))] for _ in range(2)]
            fs.write(" ".join(sent) + "\n")
            ft.write(" ".join(en[w] for w in sent) + "\n")
    with open(tmp_path / "lex.tsv", "w") as f:
        for w, e in en.items():
            f.write(f"{w}\t{e}\n")
    hr_words = sorted(set(en.values()))
    with open(tmp_path / "hr.vec", "w") as f:
        for w in hr_words:
            vec = " ".join("%.4f" % v for v in rng.uniform(-1, 1, 8))
            f.write(f"{w} {vec}\n")
    return (f"data.bible_src={tmp_path}/b.src\n"
            f"data.bible_tgt={tmp_path}/b.tgt\n"
            f"data.corpus2_src={tmp_path}/c.src\n"
            f"data.corpus2_tgt={tmp_path}/c.tgt\n"
            f"data.lexicon={tmp_path}/lex.tsv\n"
            f"data.hr_embeddings={tmp_path}/hr.vec\n"
            "subword.dim=8\nsubword.epochs=1\nsubword.buckets=100\n"
            "subword.subsample=0\n"
            "nmt.emb_dim=8\nnmt.hidden=8\nnmt.dropout=0\nnmt.max_decode_len=6\n"
            "nmt.beam=2\ntrain.epochs=1\ntrain.batch=16\nfinetune.epochs=1\n")


class TestPipeline:
    def test_run_all_smoke(self, tmp_path, capsys):
        cfg_path = write_cfg(tmp_path, micro_dataset(tmp_path))
        out = tmp_path / "out"
        rc = main(["run-all", "--config", str(cfg_path), "--out", str(out),
                   "--deterministic", "--strategies", "Random,XhMeta"])
        assert rc == 0
        lines = (out / "results.tsv").read_text().splitlines()
        assert lines[0].split("\t") == [
            "strategy", "bible_corpus_bleu", "bible_mean_sentence_bleu",
            "corpus2_corpus_bleu", "corpus2_mean_sentence_bleu"]
        assert [l.split("\t")[0] for l in lines[1:]] == ["Random", "XhMeta"]
        for name in ("vocab.src", "vocab.tgt", "subword.model", "em.vec",
                     "ev.vec", "manifest.txt", "bible.stats.txt"):
            assert (out / name).exists(), name
        for sub in ("Random", "XhMeta"):
            assert (out / sub / "bible.ckpt").exists()
            assert (out / sub / "corpus2.test.hyp").exists()
            assert (out / sub / "init.provenance.tsv").exists()

    def test_xhsub_only_needs_no_lexicon(self, tmp_path):
        text = micro_dataset(tmp_path)
        text = "\n".join(l for l in text.splitlines()
                         if not l.startswith("data.lexicon")) + "\n"
        cfg_path = write_cfg(tmp_path, text)
        out = tmp_path / "out2"
        rc = main(["run-all", "--config", str(cfg_path), "--out", str(out),
                   "--strategies", "XhSub"])
        assert rc == 0
        assert not (out / "ev.vec").exists()
