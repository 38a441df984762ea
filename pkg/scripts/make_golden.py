"""Regenerate the golden end-to-end manifest digest.

Runs the reference pipeline from tests/e2e_util.py over the bundled fixtures
and freezes the sha256 of the resulting report manifest into
tests/fixtures/golden_manifest.sha256.  Rerun after any change that is meant
to alter pipeline output; an unexplained digest change is a regression.

    python scripts/make_golden.py
"""

import pathlib
import sys
import tempfile

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "tests"))

import e2e_util


def main():
    with tempfile.TemporaryDirectory() as tmp:
        out = e2e_util.run_pipeline(tmp)
        digest = e2e_util.manifest_digest(out)
    e2e_util.GOLDEN_MANIFEST.write_text(digest + "\n", encoding="utf-8")
    print(f"golden manifest digest: {digest}")


if __name__ == "__main__":
    main()
