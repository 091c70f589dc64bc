"""Reproducible run directories: manifests, content hashes, CSV round-trip.

Every command-line run lives in its own directory named by a prefix of the
hash of its parameters, next to a `latest` pointer file. The manifest
records the full parameter set, per-output sha256 hashes, wall-clock time
and the final status, so re-running it on the same build reproduces the
outputs byte-identically. Floats are written with repr(), the shortest
decimal that round-trips exactly.
"""

import hashlib
import json
import os
import time

import numpy as np

SCHEMA_VERSION = 1
ARTIFACT_VERSION = "0.1.0"


def default_output_root():
    """Output root: $PLAPLACE_RUNS or ./runs."""
    return os.environ.get("PLAPLACE_RUNS", os.path.join(os.curdir, "runs"))


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def params_hash(command, params):
    """Content hash of a run's identity: command name plus parameters."""
    blob = json.dumps({"command": command, "params": params},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class RunManifest:
    """Provenance record of one command run.

    Tracks the command, its full parameter set, output hashes, timing and
    status; written as versioned JSON even when the run fails.
    """

    def __init__(self, command, params):
        self.command = command
        self.params = dict(params)
        self.outputs = {}
        self.status = "running"
        self.error = None
        self.wall_seconds = None
        self._t0 = time.monotonic()

    def record_output(self, path):
        self.outputs[os.path.basename(path)] = file_sha256(path)

    def finish(self, status="ok", error=None):
        self.status = status
        self.error = error
        self.wall_seconds = time.monotonic() - self._t0

    def to_dict(self):
        return {
            "schema": SCHEMA_VERSION,
            "artifact_version": ARTIFACT_VERSION,
            "command": self.command,
            "params": self.params,
            "params_hash": params_hash(self.command, self.params),
            "outputs": self.outputs,
            "status": self.status,
            "error": self.error,
            "wall_seconds": self.wall_seconds,
            "deterministic": True,  # no RNG anywhere in the pipelines
        }

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
        return path


class RunDir:
    """A run directory plus its manifest; updates the `latest` pointer.

    Use as a context manager: on clean exit the manifest is written with
    status ok; on an exception it is written with the error recorded and
    the exception propagates.
    """

    def __init__(self, command, params, root=None):
        self.root = root or default_output_root()
        os.makedirs(self.root, exist_ok=True)
        digest = params_hash(command, params)[:12]
        self.name = f"{command}-{digest}"
        self.path = os.path.join(self.root, self.name)
        os.makedirs(self.path, exist_ok=True)
        self.manifest = RunManifest(command, params)

    def file(self, name):
        return os.path.join(self.path, name)

    def record(self, path):
        self.manifest.record_output(path)
        return path

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is None:
            self.manifest.finish("ok")
        else:
            self.manifest.finish("error", f"{exc_type.__name__}: {exc}")
        self.manifest.write(self.file("manifest.json"))
        with open(os.path.join(self.root, "latest"), "w",
                  encoding="utf-8") as fh:
            fh.write(self.name + "\n")
        return False


def write_csv(path, header, columns):
    """Write named float columns with repr() formatting (exact round-trip)."""
    columns = [np.asarray(c, dtype=float) for c in columns]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    return path


def read_csv(path):
    """Read a write_csv file back into a dict of float arrays."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = np.array([[float(x) for x in row] for row in rows])
    if data.size == 0:
        data = data.reshape(0, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}
