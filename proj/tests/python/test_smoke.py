import json
import math

import pytest

import gor


def test_tokenize_round_trip():
    tokens, offsets = gor.tokenize("Hello, world!")
    assert tokens == ["Hello", ",", "world", "!"]
    assert len(offsets) == 4
    assert offsets[0] == (0, 5)


def test_split_chunks_covers_text():
    text = " ".join(f"w{i}" for i in range(40))
    chunks = gor.split_chunks("doc", text, chunk_size=16, overlap=4)
    assert chunks[0][0] == "doc#c0"
    assert chunks[0][1] == 0
    assert chunks[-1][2] == 40
    # adjacent chunks advance by the stride
    starts = [c[1] for c in chunks]
    assert all(b - a == 12 for a, b in zip(starts, starts[1:]))


def test_bertscore_identity_and_symmetry():
    assert gor.bertscore_f1("a b c", "a b c") == pytest.approx(1.0, abs=1e-12)
    ab = gor.bertscore_f1("red fox", "red hen")
    ba = gor.bertscore_f1("red hen", "red fox")
    assert ab == pytest.approx(ba, abs=1e-12)
    assert 0.0 <= ab <= 1.0


def test_rouge_hand_case():
    scores = gor.rouge_scores("a b c d", "a c d")
    assert scores["rouge_1"] == pytest.approx(6.0 / 7.0, abs=1e-9)
    assert scores["rouge_l"] == pytest.approx(6.0 / 7.0, abs=1e-9)
    assert scores["rouge_2"] == pytest.approx(0.4, abs=1e-9)


def test_lr_schedule_endpoints():
    assert gor.lr_at(0, 150, 1e-3) == pytest.approx(1e-3)
    assert gor.lr_at(75, 150, 1e-3) == pytest.approx(5e-4)
    assert gor.lr_at(150, 150, 1e-3) == 0.0


def test_grad_check_small():
    assert gor.grad_check(1) < 1e-4


def test_full_pipeline(tmp_path):
    dataset = tmp_path / "docs.jsonl"
    dataset.write_text(
        json.dumps(
            {
                "doc_id": "pond",
                "text": (
                    "The village pond freezes solid by late December and the school "
                    "clears it for skating. In spring, frogs return to the reed bank "
                    "and herons stalk the shallows at dawn. A dredging crew deepens "
                    "the outflow channel every few years to keep the mill race running."
                ),
                "summaries": [
                    "A village pond hosts winter skating, spring frogs and herons, "
                    "and is dredged to keep the mill race running."
                ],
            }
        )
        + "\n"
    )
    config = {
        "dataset": str(dataset),
        "out_dir": str(tmp_path / "out"),
        "provider_mode": "deterministic",
        "embed_dim": 32,
        "token_dim": 16,
        "chunk_size": 16,
        "overlap": 4,
        "n_queries": 3,
        "k": 2,
        "seed": 7,
        "train": {
            "batch_size": 2,
            "epochs": 2,
            "gat": {"in_dim": 32, "hidden_per_head": 8, "heads": 4, "out_dim": 32},
        },
    }
    report = gor.run_pipeline(json.dumps(config))
    assert report["n_docs"] == 1
    assert math.isfinite(report["rouge_l"])
    assert (tmp_path / "out" / "eval_report.json").exists()
