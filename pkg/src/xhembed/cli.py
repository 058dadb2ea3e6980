"""Command-line front end: individual pipeline stages plus a `run-all`
orchestrator that reproduces the strategy-grid experiment from one config."""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import metrics
from .combine import (STRATEGY_ORDER, InitStrategy, build_initial_embeddings)
from .corpus import (SplitSpec, Vocabulary, build_vocabulary, corpus_stats,
                     load_parallel_corpus, split_corpus, write_splits)
from .embedstore import nearest_neighbors, read_embeddings, write_embeddings
from .lexproject import build_projected_matrix, read_lexicon
from .nmt import (Seq2SeqConfig, TrainConfig, build_model, fine_tune,
                  load_checkpoint, save_checkpoint, train, translate)
from .nmt.data import encode_pairs
from .subword import SkipgramConfig, SubwordModel, train_skipgram
from .toydata import toy_config_text, write_toy_dataset
from .xmap import fit_mapping, load_mapping, save_mapping

EXIT_VALIDATION = 1
EXIT_STAGE = 2


class ValidationError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage


# key -> (type, default); None default means required when used
CONFIG_KEYS = {
    "data.bible_src": (str, None),
    "data.bible_tgt": (str, None),
    "data.corpus2_src": (str, None),
    "data.corpus2_tgt": (str, None),
    "data.lexicon": (str, None),
    "data.hr_embeddings": (str, None),
    "split.train": (float, 0.7),
    "split.dev": (float, 0.2),
    "split.test": (float, 0.1),
    "split.seed": (int, 13),
    "vocab.min_count": (int, 1),
    "subword.dim": (int, 300),
    "subword.window": (int, 5),
    "subword.negatives": (int, 5),
    "subword.epochs": (int, 5),
    "subword.lr": (float, 0.05),
    "subword.subsample": (float, 1e-4),
    "subword.min_count": (int, 1),
    "subword.minn": (int, 3),
    "subword.maxn": (int, 6),
    "subword.buckets": (int, 100_000),
    "subword.seed": (int, 1),
    "subword.workers": (int, 1),
    "map.max_iters": (int, 20),
    "map.patience": (int, 3),
    "map.csls_k": (int, 10),
    "nmt.enc_layers": (int, 2),
    "nmt.dec_layers": (int, 2),
    "nmt.hidden": (int, 128),
    "nmt.emb_dim": (int, 300),
    "nmt.dropout": (float, 0.3),
    "nmt.max_decode_len": (int, 50),
    "nmt.beam": (int, 5),
    "nmt.seed": (int, 0),
    "train.lr": (float, 1e-3),
    "train.batch": (int, 64),
    "train.clip": (float, 5.0),
    "train.epochs": (int, 10),
    "train.patience": (int, 5),
    "train.seed": (int, 0),
    "finetune.lr": (float, 1e-4),
    "finetune.epochs": (int, 5),
    "finetune.patience": (int, 5),
    "run.strategies": (str, "Random,VecMap,XhSub,XhPre,XhMeta"),
    "run.out": (str, "runs/out"),
}


def load_config(path):
    cfg = {k: d for k, (_, d) in CONFIG_KEYS.items()}
    with open(path, encoding="utf-8") as f:
        for ln, raw in enumerate(f.read().splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{ln}: expected key=value")
            key, val = line.split("=", 1)
            key = key.strip()
            if key not in CONFIG_KEYS:
                raise ValidationError(f"{path}:{ln}: unknown config key {key!r}")
            typ = CONFIG_KEYS[key][0]
            try:
                cfg[key] = typ(val.strip())
            except ValueError as e:
                raise ValidationError(f"{path}:{ln}: bad value for {key}: {e}") from e
    return cfg


def _require(cfg, *keys):
    for key in keys:
        if cfg[key] is None:
            raise ValidationError(f"config key {key!r} is required but unset")
        if key.startswith("data.") and not Path(cfg[key]).exists():
            raise ValidationError(f"config key {key!r}: path {cfg[key]!r} does not exist")


def _subword_config(cfg, deterministic):
    return SkipgramConfig(
        dim=cfg["subword.dim"], window=cfg["subword.window"],
        negatives=cfg["subword.negatives"], epochs=cfg["subword.epochs"],
        lr=cfg["subword.lr"], subsample=cfg["subword.subsample"],
        min_count=cfg["subword.min_count"], minn=cfg["subword.minn"],
        maxn=cfg["subword.maxn"], buckets=cfg["subword.buckets"],
        seed=cfg["subword.seed"],
        workers=1 if deterministic else cfg["subword.workers"])


def _nmt_config(cfg):
    return Seq2SeqConfig(
        enc_layers=cfg["nmt.enc_layers"], dec_layers=cfg["nmt.dec_layers"],
        hidden=cfg["nmt.hidden"], emb_dim=cfg["nmt.emb_dim"],
        dropout=cfg["nmt.dropout"], max_decode_len=cfg["nmt.max_decode_len"],
        beam=cfg["nmt.beam"], seed=cfg["nmt.seed"])


def _train_config(cfg, section="train"):
    return TrainConfig(
        lr=cfg[f"{section}.lr"], batch_size=cfg["train.batch"],
        clip=cfg["train.clip"], epochs=cfg[f"{section}.epochs"],
        patience=cfg[f"{section}.patience"], seed=cfg["train.seed"])


def _read_split_pairs(out_dir, name, part):
    src = (Path(out_dir) / f"{name}.{part}.src").read_text(encoding="utf-8").splitlines()
    tgt = (Path(out_dir) / f"{name}.{part}.tgt").read_text(encoding="utf-8").splitlines()
    return [(s.split(), t.split()) for s, t in zip(src, tgt)]


def run_pipeline(cfg, out_dir, strategies, deterministic=True, log=print):
    """Full experiment: stats, splits, subword training, projection, mapping,
    then per-strategy MT training, fine-tuning and BLEU evaluation.  Emits
    results.tsv in the fixed strategy-grid row order and a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    strategies = [s for s in STRATEGY_ORDER if s in strategies]
    stage = "validate"
    _require(cfg, "data.bible_src", "data.bible_tgt", "data.corpus2_src",
             "data.corpus2_tgt", "data.hr_embeddings")
    if s_needs_lexicon(strategies):
        _require(cfg, "data.lexicon")
    try:
        stage = "stats+split"
        spec = SplitSpec((cfg["split.train"], cfg["split.dev"], cfg["split.test"]),
                         cfg["split.seed"])
        splits = {}
        for name, sk, tk in (("bible", "data.bible_src", "data.bible_tgt"),
                             ("corpus2", "data.corpus2_src", "data.corpus2_tgt")):
            corp = load_parallel_corpus(cfg[sk], cfg[tk], name)
            stats = corpus_stats(corp)
            (out / f"{name}.stats.txt").write_text(_stats_text(stats), encoding="utf-8")
            (out / f"{name}.load.txt").write_text(str(corp.report), encoding="utf-8")
            parts = split_corpus(corp, spec)
            write_splits(parts, out, name)
            splits[name] = parts
            log(f"[{name}] {len(corp)} pairs -> "
                f"{len(parts[0])}/{len(parts[1])}/{len(parts[2])}")

        stage = "vocab"
        src_vocab = build_vocabulary(splits["bible"][0].side("src"),
                                     cfg["vocab.min_count"])
        tgt_vocab = build_vocabulary(splits["bible"][0].side("tgt"),
                                     cfg["vocab.min_count"])
        src_vocab.save(out / "vocab.src")
        tgt_vocab.save(out / "vocab.tgt")

        stage = "train-subword"
        subword_sents = (splits["bible"][0].side("src")
                         + splits["corpus2"][0].side("src"))
        sw_cfg = _subword_config(cfg, deterministic)
        model, reports = train_skipgram(subword_sents, sw_cfg)
        model.save(out / "subword.model")
        (out / "subword.report.txt").write_text(
            "\n".join(str(r) for r in reports) + "\n", encoding="utf-8")
        e_m = model.export_matrix(src_vocab.tokens())
        write_embeddings(e_m, out / "em.vec")
        log(f"[subword] trained dim={sw_cfg.dim} over {len(model.vocab)} words")

        e_v = None
        if s_needs_lexicon(strategies):
            stage = "build-ev"
            lex = read_lexicon(cfg["data.lexicon"])
            e_hr = read_embeddings(cfg["data.hr_embeddings"])
            e_v, report = build_projected_matrix(lex, e_hr)
            write_embeddings(e_v, out / "ev.vec")
            (out / "ev.report.txt").write_text(report.to_text(), encoding="utf-8")
            log(f"[build-ev] covered {report.covered}/{len(lex)} entries")

        mapping = None
        if InitStrategy.VECMAP in strategies:
            stage = "map"
            mapping = fit_mapping(e_v, e_m)
            save_mapping(mapping, out / "mapping.txt")
            log(f"[map] objective {mapping.objective:.4f}")

        stage = "mt"
        nmt_cfg = _nmt_config(cfg)
        results = []
        for strat in strategies:
            row = _run_strategy(cfg, out, strat, nmt_cfg, src_vocab, tgt_vocab,
                                splits, e_v, model, mapping, log)
            results.append(row)

        stage = "report"
        header = ("strategy\tbible_corpus_bleu\tbible_mean_sentence_bleu\t"
                  "corpus2_corpus_bleu\tcorpus2_mean_sentence_bleu\n")
        with open(out / "results.tsv", "w", encoding="utf-8") as f:
            f.write(header)
            for strat, b, c in results:
                f.write(f"{strat}\t{b.corpus:.4f}\t{b.mean_sentence:.4f}\t"
                        f"{c.corpus:.4f}\t{c.mean_sentence:.4f}\n")
        _write_manifest(cfg, out, strategies, deterministic)
        log(f"[done] results at {out / 'results.tsv'}")
        return out / "results.tsv"
    except ValidationError:
        raise
    except Exception as e:
        raise StageError(stage, e) from e


def s_needs_lexicon(strategies):
    return any(s in (InitStrategy.XH_PRE, InitStrategy.VECMAP, InitStrategy.XH_META)
               for s in strategies)


def _stats_text(stats):
    lines = [f"sentences\t{stats.sentences}"]
    for side, st in (("src", stats.src), ("tgt", stats.tgt)):
        lines.append(f"{side}.mean_len\t{st.mean_len:.4f}")
        lines.append(f"{side}.std_len\t{st.std_len:.4f}")
        lines.append(f"{side}.total_tokens\t{st.total_tokens}")
    return "\n".join(lines) + "\n"


def _run_strategy(cfg, out, strat, nmt_cfg, src_vocab, tgt_vocab, splits,
                  e_v, sw_model, mapping, log):
    sdir = out / str(strat)
    sdir.mkdir(exist_ok=True)
    init = build_initial_embeddings(
        strat, src_vocab, e_v=e_v, subword_model=sw_model, mapping=mapping,
        dim=nmt_cfg.emb_dim, seed=nmt_cfg.seed)
    write_embeddings(init.matrix, sdir / "init.vec")
    init.write_provenance(sdir / "init.provenance.tsv")
    params = build_model(nmt_cfg, init, tgt_vocab, source_vocab=src_vocab)

    scores = []
    for ci, name in enumerate(("bible", "corpus2")):
        parts = splits[name]
        train_pairs = encode_pairs(parts[0].pairs, src_vocab, tgt_vocab)
        dev_pairs = encode_pairs(parts[1].pairs, src_vocab, tgt_vocab)
        if ci == 0:
            hyper = _train_config(cfg, "train")
            params, hist = train(params, nmt_cfg, train_pairs, dev_pairs, hyper)
        else:
            hyper = _train_config(cfg, "finetune")
            params, hist = fine_tune(params, nmt_cfg, train_pairs, dev_pairs, hyper)
        save_checkpoint(sdir / f"{name}.ckpt", nmt_cfg, params, hist)
        hyp_path = sdir / f"{name}.test.hyp"
        translate(params, nmt_cfg, parts[2].side("src"), src_vocab, tgt_vocab,
                  hyp_path, beam=nmt_cfg.beam)
        report = metrics.score_corpus(
            [l.split() for l in hyp_path.read_text(encoding="utf-8").splitlines()],
            parts[2].side("tgt"))
        (sdir / f"{name}.bleu.tsv").write_text(report.to_tsv(), encoding="utf-8")
        scores.append(report)
        log(f"[{strat}/{name}] corpus BLEU {report.corpus:.2f} "
            f"mean sentence BLEU {report.mean_sentence:.2f}")
    return str(strat), scores[0], scores[1]


def _write_manifest(cfg, out, strategies, deterministic):
    with open(out / "manifest.txt", "w", encoding="utf-8") as f:
        f.write(f"xhembed_version=0.1.0\n")
        f.write(f"deterministic={deterministic}\n")
        f.write("strategies=" + ",".join(str(s) for s in strategies) + "\n")
        for k in sorted(cfg):
            f.write(f"{k}={cfg[k]}\n")


# --------------------------------------------------------------------------
# subcommands

def _cmd_make_toy(args):
    paths = write_toy_dataset(args.out)
    cfg_path = Path(args.out) / "toy.cfg"
    cfg_path.write_text(toy_config_text(paths, Path(args.out) / "run"),
                        encoding="utf-8")
    print(f"toy dataset and config written under {args.out}")


def _cmd_stats(args):
    corp = load_parallel_corpus(args.src, args.tgt)
    print(_stats_text(corpus_stats(corp)), end="")


def _cmd_split(args):
    cfg = load_config(args.config) if args.config else {
        k: d for k, (_, d) in CONFIG_KEYS.items()}
    corp = load_parallel_corpus(args.src, args.tgt, args.name)
    spec = SplitSpec((cfg["split.train"], cfg["split.dev"], cfg["split.test"]),
                     args.seed if args.seed is not None else cfg["split.seed"])
    parts = split_corpus(corp, spec)
    write_splits(parts, args.out, args.name)
    print(f"split {len(corp)} -> {len(parts[0])}/{len(parts[1])}/{len(parts[2])}")


def _cmd_train_subword(args):
    cfg = load_config(args.config) if args.config else {
        k: d for k, (_, d) in CONFIG_KEYS.items()}
    sents = []
    for path in args.text:
        with open(path, encoding="utf-8") as f:
            sents.extend(line.split() for line in f.read().splitlines() if line)
    model, reports = train_skipgram(sents, _subword_config(cfg, args.deterministic))
    model.save(args.out)
    for r in reports:
        print(r)


def _cmd_build_ev(args):
    lex = read_lexicon(args.lexicon)
    e_hr = read_embeddings(args.hr_embeddings)
    e_v, report = build_projected_matrix(lex, e_hr)
    write_embeddings(e_v, args.out)
    print(report.to_text(), end="")


def _cmd_map(args):
    e_v = read_embeddings(args.ev)
    e_m = read_embeddings(args.em)
    model = fit_mapping(e_v, e_m)
    save_mapping(model, args.out)
    print(f"mapping objective {model.objective:.6f}")


def _cmd_init_emb(args):
    strat = InitStrategy.parse(args.strategy)
    vocab = Vocabulary.load(args.vocab)
    e_v = read_embeddings(args.ev) if args.ev else None
    model = SubwordModel.load(args.subword_model) if args.subword_model else None
    mapping = load_mapping(args.mapping) if args.mapping else None
    init = build_initial_embeddings(strat, vocab, e_v=e_v, subword_model=model,
                                    mapping=mapping, dim=args.dim, seed=args.seed)
    write_embeddings(init.matrix, args.out)
    init.write_provenance(args.out + ".provenance.tsv")


def _cmd_train_mt(args):
    cfg = load_config(args.config) if args.config else {
        k: d for k, (_, d) in CONFIG_KEYS.items()}
    nmt_cfg = _nmt_config(cfg)
    src_vocab = Vocabulary.load(args.src_vocab)
    tgt_vocab = Vocabulary.load(args.tgt_vocab)
    init = read_embeddings(args.init)
    params = build_model(nmt_cfg, init, tgt_vocab, source_vocab=src_vocab)
    train_pairs = encode_pairs(_read_split_pairs(args.data, args.name, "train"),
                               src_vocab, tgt_vocab)
    dev_pairs = encode_pairs(_read_split_pairs(args.data, args.name, "dev"),
                             src_vocab, tgt_vocab)
    params, hist = train(params, nmt_cfg, train_pairs, dev_pairs,
                         _train_config(cfg, "train"))
    save_checkpoint(args.out, nmt_cfg, params, hist)
    for rec in hist:
        print(f"epoch {rec.epoch}\tloss {rec.train_loss:.4f}\tdev_ppl {rec.dev_ppl:.4f}")


def _cmd_finetune(args):
    cfg = load_config(args.config) if args.config else {
        k: d for k, (_, d) in CONFIG_KEYS.items()}
    nmt_cfg, params, _ = load_checkpoint(args.checkpoint)
    src_vocab = Vocabulary.load(args.src_vocab)
    tgt_vocab = Vocabulary.load(args.tgt_vocab)
    train_pairs = encode_pairs(_read_split_pairs(args.data, args.name, "train"),
                               src_vocab, tgt_vocab)
    dev_pairs = encode_pairs(_read_split_pairs(args.data, args.name, "dev"),
                             src_vocab, tgt_vocab)
    params, hist = fine_tune(params, nmt_cfg, train_pairs, dev_pairs,
                             _train_config(cfg, "finetune"))
    save_checkpoint(args.out, nmt_cfg, params, hist)
    for rec in hist:
        print(f"epoch {rec.epoch}\tloss {rec.train_loss:.4f}\tdev_ppl {rec.dev_ppl:.4f}")


def _cmd_translate(args):
    nmt_cfg, params, _ = load_checkpoint(args.checkpoint)
    src_vocab = Vocabulary.load(args.src_vocab)
    tgt_vocab = Vocabulary.load(args.tgt_vocab)
    with open(args.src, encoding="utf-8") as f:
        sents = [line.split() for line in f.read().splitlines()]
    translate(params, nmt_cfg, sents, src_vocab, tgt_vocab, args.out,
              beam=args.beam or nmt_cfg.beam)
    print(f"wrote {len(sents)} hypotheses to {args.out}")


def _cmd_evaluate(args):
    report = metrics.evaluate_translations(args.hyp, args.ref)
    print(report.to_tsv(), end="")


def _cmd_neighbors(args):
    mat = read_embeddings(args.embeddings)
    if args.word not in mat:
        raise ValidationError(f"{args.word!r} not in {args.embeddings}")
    for tok, cos in nearest_neighbors(mat, mat.get(args.word), args.k):
        print(f"{tok}\t{cos:.4f}")


def _cmd_run_all(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["split.seed"] = cfg["subword.seed"] = args.seed
        cfg["nmt.seed"] = cfg["train.seed"] = args.seed
    strategies = [InitStrategy.parse(s) for s in
                  (args.strategies or cfg["run.strategies"]).split(",")]
    out = args.out or cfg["run.out"]
    run_pipeline(cfg, out, strategies, deterministic=args.deterministic)


def build_parser():
    p = argparse.ArgumentParser(prog="xhembed")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("make-toy", help="write the synthetic demo dataset")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_make_toy)

    sp = sub.add_parser("stats", help="corpus statistics")
    sp.add_argument("--src", required=True)
    sp.add_argument("--tgt", required=True)
    sp.set_defaults(func=_cmd_stats)

    sp = sub.add_parser("split", help="deterministic train/dev/test split")
    sp.add_argument("--src", required=True)
    sp.add_argument("--tgt", required=True)
    sp.add_argument("--name", default="corpus")
    sp.add_argument("--out", required=True)
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=_cmd_split)

    sp = sub.add_parser("train-subword", help="train subword embeddings")
    sp.add_argument("--text", nargs="+", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--config")
    sp.add_argument("--deterministic", action="store_true")
    sp.set_defaults(func=_cmd_train_subword)

    sp = sub.add_parser("build-ev", help="project lexicon into HR space")
    sp.add_argument("--lexicon", required=True)
    sp.add_argument("--hr-embeddings", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_build_ev)

    sp = sub.add_parser("map", help="fit cross-space orthogonal mapping")
    sp.add_argument("--ev", required=True)
    sp.add_argument("--em", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_map)

    sp = sub.add_parser("init-emb", help="build initial embeddings for a strategy")
    sp.add_argument("--strategy", required=True)
    sp.add_argument("--vocab", required=True)
    sp.add_argument("--ev")
    sp.add_argument("--subword-model")
    sp.add_argument("--mapping")
    sp.add_argument("--dim", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_init_emb)

    sp = sub.add_parser("train-mt", help="train the seq2seq model")
    sp.add_argument("--data", required=True, help="directory with split files")
    sp.add_argument("--name", default="corpus")
    sp.add_argument("--src-vocab", required=True)
    sp.add_argument("--tgt-vocab", required=True)
    sp.add_argument("--init", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--config")
    sp.set_defaults(func=_cmd_train_mt)

    sp = sub.add_parser("finetune", help="fine-tune a checkpoint on new data")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--name", default="corpus")
    sp.add_argument("--src-vocab", required=True)
    sp.add_argument("--tgt-vocab", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--config")
    sp.set_defaults(func=_cmd_finetune)

    sp = sub.add_parser("translate", help="decode a source file")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--src", required=True)
    sp.add_argument("--src-vocab", required=True)
    sp.add_argument("--tgt-vocab", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--beam", type=int)
    sp.set_defaults(func=_cmd_translate)

    sp = sub.add_parser("evaluate", help="BLEU-score a hypothesis file")
    sp.add_argument("--hyp", required=True)
    sp.add_argument("--ref", required=True)
    sp.set_defaults(func=_cmd_evaluate)

    sp = sub.add_parser("neighbors", help="nearest neighbors of a word")
    sp.add_argument("--embeddings", required=True)
    sp.add_argument("--word", required=True)
    sp.add_argument("-k", type=int, default=10)
    sp.set_defaults(func=_cmd_neighbors)

    sp = sub.add_parser("run-all", help="full strategy-grid experiment")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--deterministic", action="store_true")
    sp.add_argument("--strategies", help="comma-separated subset")
    sp.set_defaults(func=_cmd_run_all)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValidationError, ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_STAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
