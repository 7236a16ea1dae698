"""Run pylint over a directory of snippets and write one diagnostics JSON per snippet.

Usage: python3 lint_corpus.py SNIPPET_DIR OUT_DIR

Each snippet is linted in its own process so no cross-file checks leak in.
Columns are converted from pylint's character offsets to byte offsets.
"""

import json
import subprocess
import sys
from pathlib import Path

import astroid
import pylint


def linter_version():
    py = ".".join(str(p) for p in sys.version_info[:3])
    return f"pylint {pylint.__version__} / astroid {astroid.__version__} / Python {py}"


def byte_col(lines, line, col):
    if col is None or line is None or not 1 <= line <= len(lines):
        return col
    return len(lines[line - 1][:col].encode("utf-8"))


def lint(path):
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "pylint",
            "--persistent=n",
            "--score=n",
            "--output-format=json",
            str(path),
        ],
        capture_output=True,
        text=True,
        check=False,
    )
    # pylint exit codes are bit flags; 32 means usage error / crash
    if proc.returncode & 32 or not proc.stdout.strip():
        return None, proc.stderr.strip() or f"pylint exited with {proc.returncode}"
    return json.loads(proc.stdout), None


def record(path):
    source = path.read_text(encoding="utf-8")
    lines = source.splitlines(keepends=True)
    messages, error = lint(path)
    rec = {"sample_id": path.stem, "linter_version": linter_version()}
    if error is not None:
        rec["error"] = error
        rec["smells"] = []
        return rec
    smells = []
    for m in messages:
        smells.append(
            {
                "rule_id": m["message-id"],
                "symbol": m["symbol"],
                "start_line": m["line"],
                "start_col": byte_col(lines, m["line"], m["column"]),
                "end_line": m["endLine"],
                "end_col": byte_col(lines, m["endLine"], m["endColumn"]),
                "message": m["message"],
            }
        )
    smells.sort(
        key=lambda s: (
            s["start_line"],
            s["start_col"],
            s["rule_id"],
            -1 if s["end_line"] is None else s["end_line"],
            -1 if s["end_col"] is None else s["end_col"],
            s["message"],
        )
    )
    rec["smells"] = smells
    return rec


def main(argv):
    if len(argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    src, out = Path(argv[1]), Path(argv[2])
    out.mkdir(parents=True, exist_ok=True)
    for path in sorted(src.glob("*.py")):
        rec = record(path)
        text = json.dumps(rec, indent=2, ensure_ascii=False) + "\n"
        (out / f"{path.stem}.json").write_text(text, encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
