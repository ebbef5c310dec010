"""Rewrite corpus/*.expected from the current checker output.

Run from the repository root after reviewing any behaviour change:
    python scripts/regen_goldens.py
"""

import io
import sys
from contextlib import redirect_stdout
from pathlib import Path

from mtt.cli import main


def render(path: Path) -> str:
    buf = io.StringIO()
    with redirect_stdout(buf):
        main(["check", "--deterministic", str(path)])
    return buf.getvalue()


if __name__ == "__main__":
    for mtt_file in sorted(Path("corpus").glob("*.mtt")):
        mtt_file.with_suffix(".expected").write_text(render(mtt_file), encoding="utf-8")
        print(f"wrote {mtt_file.with_suffix('.expected')}", file=sys.stderr)
