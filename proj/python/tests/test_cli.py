import os
import re
import shutil
import subprocess
import time
import urllib.request

import pytest

CLI = os.environ.get("CORPUSFLOW_CLI") or shutil.which("corpusflow")
pytestmark = pytest.mark.skipif(not CLI, reason="corpusflow binary not available")


def run(*args, check=True):
    proc = subprocess.run([CLI, *args], capture_output=True, timeout=120)
    if check and proc.returncode != 0:
        raise AssertionError(proc.stderr.decode())
    return proc


def test_stats_golden_through_attach(tmp_path, fixtures):
    store = ["--storage", str(tmp_path)]
    run(*store, "ingest", "--corpus", "s", str(fixtures / "stats_corpus.zip"))
    for doc in ("a", "b"):
        run(*store, "attach", "--corpus", "s", "--doc", doc, "--layer", "gold", str(fixtures / f"stats_{doc}.conllup"))
    out = run(*store, "stats", "--corpus", "s", "--layer", "gold").stdout.decode()
    assert out == (fixtures / "stats_golden.csv").read_text(encoding="utf-8")


def test_annotate_convert_export(tmp_path, fixtures):
    store = ["--storage", str(tmp_path / "store")]
    run(*store, "ingest", "--corpus", "news", str(fixtures / "e2e_corpus.zip"))
    run(*store, "annotate", "--corpus", "news", "--operations", "tokenization")
    run(*store, "convert-spans", "--corpus", "news", "--layer", "annotation")
    run(*store, "link-geonames", "--corpus", "news", "--layer", "annotation",
        "--index", str(fixtures / "geonames_extract.tsv"))
    out = tmp_path / "news.zip"
    run(*store, "export", "--corpus", "news", "--layers", "annotation", "-o", str(out))
    assert out.stat().st_size > 0


def test_exit_codes(tmp_path, fixtures):
    store = ["--storage", str(tmp_path)]
    assert run(check=False).returncode == 2
    assert run(*store, "stats", "--corpus", "nope", "--layer", "x", check=False).returncode == 1
    assert run(*store, "annotate", "--corpus", "nope", "--operations", "flying", check=False).returncode == 2
    bad = tmp_path / "bad.zip"
    bad.write_bytes(b"not a zip")
    assert run(*store, "ingest", "--corpus", "c", str(bad), check=False).returncode == 1


def test_mock_worker_health():
    proc = subprocess.Popen([CLI, "mock-worker", "--port", "0"], stderr=subprocess.PIPE)
    try:
        line = proc.stderr.readline().decode()
        port = int(re.search(r":(\d+)$", line.strip()).group(1))
        deadline = time.time() + 10
        while True:
            try:
                with urllib.request.urlopen(f"http://127.0.0.1:{port}/health", timeout=2) as r:
                    assert r.status == 200
                    break
            except OSError:
                if time.time() > deadline:
                    raise
                time.sleep(0.05)
    finally:
        proc.terminate()
        assert proc.wait(timeout=10) == 0
