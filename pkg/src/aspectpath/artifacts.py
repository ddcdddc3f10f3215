"""Atomic artifact writing with a provenance comment header."""
from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager
from typing import Iterable, Iterator


def provenance(command: str, flags: dict) -> str:
    """One comment line recording the command and its full flag set (seed included)."""
    return f"# aspectpath {command} {json.dumps(flags, sort_keys=True, default=str)}\n"


@contextmanager
def atomic_write(path: str, binary: bool = False) -> Iterator:
    """Write to a temporary file beside ``path`` and rename it into place on success."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb" if binary else "w", **({} if binary else {"encoding": "utf-8"})) as f:
            yield f
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def skip_comments(lines: Iterable[str]) -> Iterator[str]:
    """Drop the leading ``#`` header lines of an artifact, keep everything after."""
    header = True
    for line in lines:
        if header and line.startswith("#"):
            continue
        header = False
        yield line
