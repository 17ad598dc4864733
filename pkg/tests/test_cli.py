import pytest

from nertagger import cli, data, modelfile
from nertagger.synthetic import toy_splits

CONFIG = """\
# toy run
train_path = {d}/train.conll
dev_path = {d}/dev.conll
model_out = {d}/model.bin
epochs = 2
hidden = 6
word_dim = 6
char_dim = 3
char_hidden = 3
seed = 7
"""


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    tr, dv, te = toy_splits(30, 12, 5, seed=1)
    data.write_conll(d / "train.conll", tr)
    data.write_conll(d / "dev.conll", dv)
    data.write_conll(d / "test.conll", te)
    return d


def write_config(path, corpus, extra="", model_dir=None):
    text = CONFIG.format(d=corpus)
    if model_dir is not None:
        text = text.replace(f"model_out = {corpus}/model.bin", f"model_out = {model_dir}/model.bin")
    path.write_text(text + extra, encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def trained(corpus, tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    cfg = write_config(d / "run.cfg", corpus, model_dir=d)
    assert cli.main(["train", str(cfg)]) == 0
    return d


def test_train_smoke(trained, capsys):
    assert (trained / "model.bin").is_file()
    lines = (trained / "model.bin.log").read_text().splitlines()
    assert sum(line.startswith("epoch ") for line in lines) >= 1
    assert lines[-1].startswith("best epoch")


def test_rerun_is_byte_identical(trained, corpus, tmp_path):
    cfg = write_config(tmp_path / "run.cfg", corpus, model_dir=tmp_path)
    assert cli.main(["train", str(cfg)]) == 0
    assert (tmp_path / "model.bin").read_bytes() == (trained / "model.bin").read_bytes()
    assert (tmp_path / "model.bin.log").read_bytes() == \
        (trained / "model.bin.log").read_bytes()


@pytest.mark.parametrize("extra", ["beta = -1\n", "bogus = 3\n", "epochs = many\n",
                                   "aux_path = /tmp/aux.txt\n"])
def test_bad_config_exits_2(corpus, tmp_path, extra):
    cfg = write_config(tmp_path / "bad.cfg", corpus, extra, model_dir=tmp_path)
    assert cli.main(["train", str(cfg)]) == 2
    assert not (tmp_path / "model.bin").exists()


def test_missing_data_file_exits_2(corpus, tmp_path):
    cfg = write_config(tmp_path / "c.cfg", corpus, "test_path = /nonexistent.conll\n",
                       model_dir=tmp_path)
    assert cli.main(["train", str(cfg)]) == 2


def test_divergence_exits_3(corpus, tmp_path):
    cfg = write_config(tmp_path / "c.cfg", corpus, "lr = 1e300\nmomentum = 0\n",
                       model_dir=tmp_path)
    assert cli.main(["train", str(cfg)]) == 3
    assert not (tmp_path / "model.bin").exists()


def test_config_parsing(corpus, tmp_path):
    cfg = write_config(tmp_path / "c.cfg", corpus,
                       "clip = 5\nlowercase = false\nscheme = iob1  # input scheme\n")
    run = cli.parse_config(cfg)
    assert run.train.clip == 5.0 and run.train.lowercase is False
    assert run.train.scheme == "iob1" and run.train.epochs == 2
    assert run.train_path == f"{corpus}/train.conll"


def test_predict_two_sentences(trained, corpus, tmp_path):
    src = tmp_path / "two.conll"
    sents = data.read_conll(corpus / "test.conll")[:2]
    data.write_conll(src, sents)
    out = tmp_path / "pred.conll"
    assert cli.main(["predict", str(trained / "model.bin"), str(src), str(out)]) == 0
    pred = data.read_conll(out)
    assert len(pred) == 2
    for before, after in zip(sents, pred):
        assert after.tokens == before.tokens
        assert [c[:-1] for c in after.columns] == before.columns


def test_predict_unlabelled_and_empty_input(trained, tmp_path):
    raw = tmp_path / "raw.conll"
    raw.write_text("in\nZzqx\n\n")
    out = tmp_path / "o.conll"
    assert cli.main(["predict", str(trained / "model.bin"), str(raw), str(out)]) == 0
    assert [len(c) for c in data.read_conll(out)[0].columns] == [2, 2]
    empty = tmp_path / "empty.conll"
    empty.write_text("")
    assert cli.main(["predict", str(trained / "model.bin"), str(empty), str(out)]) == 0
    assert out.read_text() == ""


def test_predict_incompatible_aux_exits_4(trained, corpus, tmp_path):
    aux = tmp_path / "aux.txt"
    sents = data.read_conll(corpus / "test.conll")
    aux.write_text("".join(f"# sentence {k}\n" + "0 0\n" * len(s) for k, s in enumerate(sents)))
    code = cli.main(["predict", str(trained / "model.bin"), str(corpus / "test.conll"),
                     str(tmp_path / "o.conll"), "--aux", str(aux)])
    assert code == 4


def test_predict_corrupt_model_exits_4(trained, corpus, tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes((trained / "model.bin").read_bytes()[:-1])
    assert cli.main(["predict", str(bad), str(corpus / "test.conll"),
                     str(tmp_path / "o.conll")]) == 4


def test_predict_then_eval_reproduces_dev_f1(trained, corpus, tmp_path, capsys):
    out = tmp_path / "dev.pred"
    assert cli.main(["predict", str(trained / "model.bin"), str(corpus / "dev.conll"),
                     str(out)]) == 0
    capsys.readouterr()
    assert cli.main(["eval", str(corpus / "dev.conll"), str(out)]) == 0
    kv = dict(line.split("=", 1) for line in capsys.readouterr().out.splitlines()
              if "=" in line)
    dev_f1 = modelfile.load_model(trained / "model.bin").dev_f1
    assert float(kv["f1"]) == dev_f1


def _write_labels(path, sentences):
    with open(path, "w") as fh:
        for k, labels in enumerate(sentences):
            for t, lab in enumerate(labels):
                fh.write(f"w{k}_{t} {lab}\n")
            fh.write("\n")


GOLD = [["B-PER", "I-PER", "O", "B-LOC"], ["O", "B-ORG"], ["B-LOC", "O"]]
PRED = [["B-PER", "I-PER", "O", "B-ORG"], ["O", "B-ORG"], ["O", "O"]]


def test_eval_reports(tmp_path, capsys):
    gold, pred = tmp_path / "g", tmp_path / "p"
    _write_labels(gold, GOLD)
    _write_labels(pred, PRED)
    assert cli.main(["eval", str(gold), str(gold)]) == 0
    assert "FB1: 100.00" in capsys.readouterr().out
    assert cli.main(["eval", str(gold), str(pred)]) == 0
    out = capsys.readouterr().out
    assert "FB1:  57.14" in out
    assert "correct=2" in out


def test_eval_errors(tmp_path, capsys):
    gold, pred = tmp_path / "g", tmp_path / "p"
    _write_labels(gold, GOLD)
    assert cli.main(["eval", str(gold), str(tmp_path / "missing")]) == 2
    _write_labels(pred, PRED[:2])
    assert cli.main(["eval", str(gold), str(pred)]) == 4
    assert "sentence 2" in capsys.readouterr().err


def test_compare(tmp_path, capsys):
    gold = [["O"] * k + ["B-PER", "I-PER"] + ["O"] * (3 - k) for k in range(4)] * 5
    g, a, b = tmp_path / "g", tmp_path / "a", tmp_path / "b"
    _write_labels(g, gold)
    _write_labels(a, gold)
    _write_labels(b, [["O"] * len(x) for x in gold])
    assert cli.main(["compare", str(g), str(a), str(a), "--iters", "200"]) == 0
    assert "p=1.0" in capsys.readouterr().out.splitlines()
    assert cli.main(["compare", str(g), str(a), str(b), "--iters", "2000"]) == 0
    out = dict(line.split("=") for line in capsys.readouterr().out.splitlines())
    assert float(out["p"]) < 0.01
    assert float(out["f1_a"]) == 1.0 and float(out["f1_b"]) == 0.0
    assert cli.main(["compare", str(g), str(a), str(b), "--iters", "0"]) == 2


def test_usage_errors():
    assert cli.main([]) == 2
    assert cli.main(["frobnicate"]) == 2
