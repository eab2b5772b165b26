"""
Tests for the command-line entry point, driven in-process through app.run().
"""

import io
import json
import math

import pytest

from app import EXIT_DOMAIN, EXIT_OK, EXIT_USAGE, run
from tool.benchEval.index import load_benchmark
from tool.benchEval.schema import BenchSample, TierTriple


def run_cli(*argv):
    stdout = io.StringIO()
    code = run(list(argv), stdout=stdout)
    return code, stdout.getvalue()


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(record) + "\n" for record in records), encoding="utf-8")
    return str(path)


def annotated_pool(n_sources=10):
    tiers = [
        ("good", "good", "good"),
        ("good", "medium", "good"),
        ("medium", "medium", "medium"),
        ("medium", "good", "bad"),
        ("bad", "bad", "bad"),
        ("bad", "medium", "bad"),
    ]
    records = []
    for index in range(n_sources):
        for k, (overall, pf, q) in enumerate(tiers):
            sample = BenchSample(
                sample_id=f"s{index}-{k}",
                model_id=f"model-{k}",
                instruction=f"instruction {index}",
                source_ref=f"src-{index}.png",
                edited_ref=f"s{index}-{k}.png",
                tiers=TierTriple(prompt_following=pf, quality=q, overall=overall),
            )
            records.append(json.loads(sample.model_dump_json()))
    return records


@pytest.fixture(autouse=True)
def shipped_config(monkeypatch):
    monkeypatch.delenv("REWARD_CONFIG_PATH", raising=False)
    monkeypatch.delenv("REWARD_JUDGE_ENDPOINT", raising=False)


# ---------------------------------------------------------------- usage

def test_no_subcommand_is_a_usage_error():
    assert run_cli()[0] == EXIT_USAGE


def test_unknown_flag_is_a_usage_error():
    assert run_cli("bench", "--bogus")[0] == EXIT_USAGE


def test_missing_input_file_is_a_usage_error(tmp_path):
    assert run_cli("diagnose", "--input", str(tmp_path / "absent.jsonl"))[0] == EXIT_USAGE


# ---------------------------------------------------------------- bench

def test_bench_compose_then_oracle_evaluation(tmp_path):
    pool = write_jsonl(tmp_path / "pool.jsonl", annotated_pool())
    groups_path = tmp_path / "groups.jsonl"
    code, _ = run_cli("bench", "--compose", "--input", pool, "--counts", "5,5,5", "--seed", "1",
                      "--output", str(groups_path))
    assert code == EXIT_OK

    groups = load_benchmark(str(groups_path))
    assert [g.size for g in groups].count(4) == 5

    # a scorer that reproduces the tier ordering is a perfect oracle
    predictions = {}
    for group in groups:
        for s in group.samples:
            overall, pf, q = s.tiers.key()
            predictions[s.sample_id] = overall * 100 + pf * 10 + q
    pred_path = write_jsonl(tmp_path / "pred.jsonl",
                            [{"sample_id": k, "reward": v} for k, v in predictions.items()])

    report_path = tmp_path / "report.json"
    code, _ = run_cli("bench", "--input", str(groups_path), "--predictions", pred_path, "--output", str(report_path))
    assert code == EXIT_OK
    report = json.loads(report_path.read_text(encoding="utf-8"))
    assert report["accuracy_2p"] == 1.0
    assert report["accuracy_3p"] == 1.0
    assert report["accuracy_4p"] == 1.0
    assert report["overall"] == 1.0
    # the terminal table never reaches the report file
    assert "┌" not in report_path.read_text(encoding="utf-8")


def test_bench_compose_is_byte_identical_for_a_seed(tmp_path):
    pool = write_jsonl(tmp_path / "pool.jsonl", annotated_pool())
    first = run_cli("bench", "--compose", "--input", pool, "--counts", "3,3,3", "--seed", "9")[1]
    second = run_cli("bench", "--compose", "--input", pool, "--counts", "3,3,3", "--seed", "9")[1]
    assert first == second and first


def test_bench_missing_prediction_is_a_domain_error(tmp_path):
    pool = write_jsonl(tmp_path / "pool.jsonl", annotated_pool(2))
    groups_path = tmp_path / "groups.jsonl"
    run_cli("bench", "--compose", "--input", pool, "--counts", "1,0,0", "--output", str(groups_path))
    pred_path = write_jsonl(tmp_path / "pred.jsonl", [{"sample_id": "nobody", "reward": 1.0}])
    assert run_cli("bench", "--input", str(groups_path), "--predictions", pred_path)[0] == EXIT_DOMAIN


# ---------------------------------------------------------------- diagnose

def test_diagnose_uniform_corpus(tmp_path):
    uniform = [1.0 / 576] * 576
    corpus = write_jsonl(tmp_path / "attn.jsonl",
                         [{"sample_id": f"u{i}", "source_grid": uniform, "edited_grid": uniform} for i in range(3)])
    code, out = run_cli("diagnose", "--input", corpus)
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["source_entropy"]["mean"] == pytest.approx(math.log(576), abs=1e-9)
    assert report["source_entropy"]["std"] == pytest.approx(0.0, abs=1e-12)
    assert report["gap"]["mean"] == pytest.approx(0.0, abs=1e-12)
    assert report["stability"] is None


# ---------------------------------------------------------------- validate

def test_validate_counts_each_error_class(tmp_path):
    valid_sc = {"edit_region": [{"id": 0, "label": "hat", "bbox_2d": [10, 10, 90, 90]}],
                "reasoning": "<|bbox_0|>The hat is added. <|global|>Fine.", "score": [20, 21]}
    dangling = {"edit_region": [{"id": 0, "label": "hat", "bbox_2d": [10, 10, 90, 90]}],
                "reasoning": "<|bbox_3|>Something else. <|global|>Fine.", "score": [20, 21]}
    corpus = write_jsonl(tmp_path / "transcripts.jsonl", [
        {"id": "ok-sc", "stream": "sc", "raw": json.dumps(valid_sc)},
        {"id": "bad-ref", "stream": "sc", "raw": json.dumps(dangling)},
        {"id": "ok-pq", "stream": "pq", "raw": json.dumps({"reasoning": "Natural.", "score": [22, 23]})},
    ])
    code, out = run_cli("validate", "--input", corpus)
    assert code == EXIT_DOMAIN
    report = json.loads(out)
    assert report["error_counts"] == {"DanglingBboxRef": 1}
    assert report["valid"] == 2
    assert report["failures"][0]["id"] == "bad-ref"


def test_validate_clean_corpus_exits_zero(tmp_path):
    corpus = write_jsonl(tmp_path / "transcripts.jsonl",
                         [{"stream": "pq", "raw": json.dumps({"reasoning": "ok", "score": [1, 2]})}])
    assert run_cli("validate", "--input", corpus)[0] == EXIT_OK


# ---------------------------------------------------------------- score

def test_score_single_request_is_byte_identical(tmp_path):
    request = tmp_path / "request.json"
    request.write_text(json.dumps({
        "request_id": "cli-1",
        "instruction": "add a rainbow over the lake",
        "source_refs": ["lake.png"],
        "edited_ref": "lake_rainbow.png",
        "mode": "full",
    }), encoding="utf-8")

    code, first = run_cli("score", "--input", str(request), "--seed", "4")
    assert code == EXIT_OK
    assert first == run_cli("score", "--input", str(request), "--seed", "4")[1]
    response = json.loads(first)
    assert response["request_id"] == "cli-1"
    assert 0 <= response["reward"] <= 25
    assert "timing" not in response


def test_score_batch_file_and_mode_override(tmp_path):
    requests = write_jsonl(tmp_path / "batch.jsonl", [
        {"request_id": f"b{i}", "instruction": "blur the background", "source_refs": ["p.png"], "edited_ref": f"e{i}.png"}
        for i in range(4)
    ])
    code, out = run_cli("score", "--input", requests, "--mode", "pq", "--timing")
    assert code == EXIT_OK
    responses = json.loads(out)
    assert [r["request_id"] for r in responses] == ["b0", "b1", "b2", "b3"]
    assert all(r["mode"] == "pq" and r["reward"] is None for r in responses)
    assert all(r["timing"]["total_ms"] >= 0 for r in responses)


def test_score_invalid_request_is_a_domain_error(tmp_path):
    request = tmp_path / "request.json"
    request.write_text(json.dumps({"instruction": "x", "source_refs": [], "edited_ref": "e.png"}), encoding="utf-8")
    assert run_cli("score", "--input", str(request))[0] == EXIT_DOMAIN


# ---------------------------------------------------------------- grid-search and grpo-sim

def test_grid_search_on_dominating_pairs(tmp_path):
    pairs = write_jsonl(tmp_path / "pairs.jsonl", [
        {"better": {"s_if": 20, "s_con": 20, "s_nat": 20, "s_art": 20},
         "worse": {"s_if": 10, "s_con": 10, "s_nat": 10, "s_art": 10}}
    ])
    code, out = run_cli("grid-search", "--input", pairs)
    assert code == EXIT_OK
    result = json.loads(out)
    assert result["cells_evaluated"] == 64
    assert result["best_accuracy"] == 1.0


def test_grid_search_empty_input_is_a_domain_error(tmp_path):
    empty = tmp_path / "pairs.jsonl"
    empty.write_text("", encoding="utf-8")
    assert run_cli("grid-search", "--input", str(empty))[0] == EXIT_DOMAIN


def test_grpo_sim_is_byte_identical_for_a_seed(tmp_path):
    first = run_cli("grpo-sim", "--steps", "20", "--seed", "3")
    second = run_cli("grpo-sim", "--steps", "20", "--seed", "3")
    assert first[0] == EXIT_OK
    assert first[1] == second[1]
    lines = first[1].strip().splitlines()
    assert len(lines) == 20
    assert json.loads(lines[0])["step"] == 1


def test_grpo_sim_bad_initial_point_is_a_usage_error():
    assert run_cli("grpo-sim", "--initial", "a,b,c,d")[0] == EXIT_USAGE


def test_serve_with_a_bad_bind_is_a_domain_error():
    assert run_cli("serve", "--bind", "no-port-here")[0] == EXIT_DOMAIN
