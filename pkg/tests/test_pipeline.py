import json
from dataclasses import replace
from pathlib import Path

import pytest

from typolex.candidates import TemplateParams
from typolex.cli import main
from typolex.config import RunConfig, SemanticsConfig
from typolex.errors import CapacityError
from typolex.grammars import GrammarSpec
from typolex.inventory import SamplerConfig
from typolex.pipeline import run_full_pipeline, sha256_file

GOLDEN = Path(__file__).parent / "data" / "golden_manifest.json"


def mini_config(out) -> RunConfig:
    return RunConfig(
        replicates=2,
        grammars=(GrammarSpec("deterministic"), GrammarSpec("maxent")),
        lexicon_sizes=(50, 100),
        semantics=SemanticsConfig(restarts=2, max_iters=200, max_proposals=20_000),
        output_dir=str(out),
    )


@pytest.fixture(scope="module")
def mini_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    return out, run_full_pipeline(mini_config(out))


def test_manifest_covers_every_file(mini_run):
    out, manifest = mini_run
    assert set(manifest.stages) == {"ingest", "sample", "generate", "semantics", "evaluate"}
    files = manifest.files()
    written = {str(p.relative_to(out)) for p in out.rglob("*") if p.is_file() and p.name != "manifest.json"}
    assert written == set(files)
    for rel, digest in files.items():
        assert sha256_file(out / rel) == digest
    on_disk = json.loads((out / "manifest.json").read_text())
    assert on_disk["config_hash"] == mini_config(out).content_hash()
    assert on_disk["error"] is None and on_disk["tool_version"]


def test_stage_outputs_chain(mini_run):
    out, _ = mini_run
    metrics = (out / "metrics.csv").read_text().splitlines()
    assert len(metrics) == 1 + 2 * 2 * 2
    assert {p.name for p in (out / "lexicons").iterdir()} == {
        f"{k}_replicate{r}.json" for k in ("deterministic", "maxent") for r in (0, 1)}
    sem = json.loads((out / "semantics" / "maxent.json").read_text())
    assert len(sem["lexicon"]) == 100
    assert RunConfig.load(out / "config.yaml").content_hash() == mini_config(out).content_hash()


def test_rerun_identical(mini_run, tmp_path):
    _, first = mini_run
    second = run_full_pipeline(mini_config(tmp_path / "again"))
    assert first.to_dict(timestamps=False) == second.to_dict(timestamps=False)


def test_matches_golden_manifest(mini_run):
    _, manifest = mini_run
    golden = json.loads(GOLDEN.read_text())
    assert manifest.to_dict(timestamps=False)["stages"] == golden["stages"]
    assert manifest.config_hash == golden["config_hash"]


def test_parallel_generation_identical(mini_run, tmp_path):
    _, serial = mini_run
    par = run_full_pipeline(replace(mini_config(tmp_path / "par"), workers=2))
    assert par.to_dict(timestamps=False)["stages"]["generate"] == serial.to_dict(timestamps=False)["stages"]["generate"]


def test_partial_manifest_on_failure(tmp_path):
    cfg = replace(
        mini_config(tmp_path),
        sampler=SamplerConfig(consonant_count_range=(14, 14), vowel_count_range=(3, 3)),
        template=TemplateParams(syllable_count_distribution={1: 1.0}, onset_probability=1.0,
                                coda_probability=0.0, max_onset_width=1),
        lexicon_sizes=(60, 100),
    )
    with pytest.raises(CapacityError):
        run_full_pipeline(cfg)
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["error"]["stage"] == "generate" and m["error"]["error"] == "capacity_error"
    assert set(m["stages"]) == {"ingest", "sample"}


def test_run_subcommand(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(mini_config(tmp_path / "unused").to_yaml())
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "cli")]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["config_hash"] == mini_config(tmp_path).content_hash()
    assert (tmp_path / "cli" / "manifest.json").exists()
