"""Smoke test for the pocketlens_py extension module.

Build first with `cargo build -p pocketlens-py --features extension-module`
(or `--release`), then run `python3 python/smoke_test.py`. Set
POCKETLENS_PY_LIB to point at a specific shared library.
"""

import importlib.machinery
import importlib.util
import os
import pathlib
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def find_library():
    explicit = os.environ.get("POCKETLENS_PY_LIB")
    if explicit:
        return pathlib.Path(explicit)
    names = ["libpocketlens_py.so", "libpocketlens_py.dylib", "pocketlens_py.dll"]
    for profile in ("release", "debug"):
        for name in names:
            candidate = ROOT / "target" / profile / name
            if candidate.exists():
                return candidate
    sys.exit("extension not built: run `cargo build -p pocketlens-py --features extension-module`")


def load(path):
    loader = importlib.machinery.ExtensionFileLoader("pocketlens_py", str(path))
    spec = importlib.util.spec_from_file_location("pocketlens_py", path, loader=loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def main():
    pl = load(find_library())
    print("pocketlens_py", pl.__version__)

    assert pl.detect_language("how to set up the vpn") == "en"
    assert pl.detect_language("как настроить впн") == "ru"
    assert pl.is_nonconversational("if(x){y();}")
    assert not pl.is_nonconversational("just some ordinary words here")
    assert pl.tokenize("How to set up the VPN") == ["set", "vpn"]

    a = pl.hash_embed("cat dog", 64)
    b = pl.hash_embed("cat dog cat", 64)
    assert len(a) == 64 and pl.cosine(a, b) > 0.8

    points = [[float(i % 5), 0.0] for i in range(20)] + [[100.0 + i % 5, 0.0] for i in range(20)]
    c = pl.cluster(points, min_cluster_size=5)
    assert c.cluster_count == 2 and c.outlier_count == 0, c
    assert c.labels[0] == 0 and c.labels[20] == 1

    kws = pl.lda_keywords([["vpn", "vpn", "proxy"], ["vpn", "tor"]], top_n=2)
    assert [w for w, _ in kws] == ["vpn", "proxy"]

    words = [f"w{i}" for i in range(20)]
    assert pl.keyword_cosine(words, words[:7] + [f"x{i}" for i in range(13)]) == 7 / 20
    assert pl.classify(0.35) == "somewhat_related"
    assert pl.classify(0.40) == "highly_related"
    assert pl.classify(0.15) == "not_related"
    assert pl.rand_index([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0

    with tempfile.TemporaryDirectory() as tmp:
        run = pl.Pipeline(tmp, "synth_docs_per_topic = 40\nmin_cluster_size = 10\n")
        ran = run.run_all()
        assert ran[0] == "synth" and ran[-1] == "report", ran
        assert run.run_all() == []
        report = run.report()
        assert "## Pockets of knowledge" in report
        run.close()

    print("smoke test passed")


if __name__ == "__main__":
    main()
