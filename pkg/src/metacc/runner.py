"""Process execution seam: real subprocesses or a recording fake for tests."""

from __future__ import annotations

import os
import shutil
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable


@dataclass
class Completed:
    returncode: int
    stdout: str = ""
    stderr: str = ""


class Runner:
    def run(self, argv: list[str], env: dict | None = None, cwd: str | None = None,
            timeout: float | None = None) -> Completed:
        raise NotImplementedError

    def available(self, program: str) -> bool:
        raise NotImplementedError


class SubprocessRunner(Runner):
    def run(self, argv, env=None, cwd=None, timeout=None) -> Completed:
        full_env = None if env is None else {**os.environ, **env}
        try:
            p = subprocess.run(argv, env=full_env, cwd=cwd, capture_output=True, text=True,
                               timeout=timeout, check=False)
        except FileNotFoundError as exc:
            return Completed(127, "", str(exc))
        except subprocess.TimeoutExpired as exc:
            return Completed(124, "", f"timed out after {exc.timeout}s")
        return Completed(p.returncode, p.stdout, p.stderr)

    def available(self, program: str) -> bool:
        return shutil.which(program) is not None or Path(program).is_file()


def touch_outputs(argv: list[str], env: dict | None = None) -> Completed:
    """Default fake behaviour: succeed and create whatever follows ``-o``."""
    for i, a in enumerate(argv[:-1]):
        if a == "-o":
            Path(argv[i + 1]).parent.mkdir(parents=True, exist_ok=True)
            Path(argv[i + 1]).write_text(" ".join(argv) + "\n")
    return Completed(0)


class RecordingRunner(Runner):
    """Records every invocation and the peak number of concurrent ones.

    Without ``inner`` the commands are not executed; ``respond`` decides the
    outcome (default: succeed and create the ``-o`` target).
    """

    def __init__(self, inner: Runner | None = None,
                 respond: Callable[[list[str], dict | None], Completed] | None = None,
                 missing: set | None = None, delay: float = 0.0):
        self.inner = inner
        self.respond = respond or touch_outputs
        self.missing = set(missing or ())
        self.delay = delay
        self.transcript: list[list[str]] = []
        self.active = 0
        self.max_active = 0
        self._lock = threading.Lock()

    def run(self, argv, env=None, cwd=None, timeout=None) -> Completed:
        with self._lock:
            self.transcript.append(list(argv))
            self.active += 1
            self.max_active = max(self.max_active, self.active)
        try:
            if self.delay:
                threading.Event().wait(self.delay)
            if self.inner is not None:
                return self.inner.run(argv, env, cwd, timeout)
            return self.respond(list(argv), env)
        finally:
            with self._lock:
                self.active -= 1

    def available(self, program: str) -> bool:
        if program in self.missing:
            return False
        return True if self.inner is None else self.inner.available(program)
