"""Artifact persistence: policy/value files, JSONL curves, manifests.

All writers produce deterministic bytes for a given payload (sorted keys,
Python's shortest-round-trip float repr), which is what makes the
byte-identical-rerun guarantee checkable. Floats survive a save/load
round trip bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .errors import IntegrityError
from .net import (
    GaussianPolicy,
    ValueNet,
    policy_from_doc,
    policy_to_doc,
    value_from_doc,
    value_to_doc,
)


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=True) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_canonical(obj), encoding="utf-8")


def read_json(path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"failed to parse {path} at byte offset {exc.pos}: {exc.msg}") from exc


def write_jsonl(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_jsonl(path) -> list:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(json.loads(line))
    return out


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(doc) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# --- policy / value files ------------------------------------------------------

def save_policy(policy: GaussianPolicy, path, meta: dict | None = None) -> None:
    write_json(path, policy_to_doc(policy, meta))


def load_policy(path, expected_sha256: str | None = None) -> GaussianPolicy:
    if expected_sha256 is not None:
        actual = sha256_file(path)
        if actual != expected_sha256:
            raise IntegrityError(
                f"{path}: sha256 {actual} does not match manifest entry {expected_sha256}"
            )
    doc = read_json(path)
    try:
        return policy_from_doc(doc)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed policy document ({exc})") from exc


def load_policy_meta(path) -> dict:
    return read_json(path).get("meta", {})


def save_value(value: ValueNet, path, meta: dict | None = None) -> None:
    write_json(path, value_to_doc(value, meta))


def load_value(path) -> ValueNet:
    return value_from_doc(read_json(path))


# --- manifest -------------------------------------------------------------------

def build_manifest(out_dir, cfg_hash: str, code_version: str, master_seed: int,
                   stage_seeds: dict, files, status: str = "complete",
                   created: str | None = None) -> dict:
    entries = []
    for name in sorted(files):
        p = Path(out_dir) / name
        entries.append({"path": name, "sha256": sha256_file(p), "bytes": p.stat().st_size})
    return {
        "config_hash": cfg_hash,
        "code_version": code_version,
        "master_seed": int(master_seed),
        "stage_seeds": {k: int(v) for k, v in stage_seeds.items()},
        "files": entries,
        "status": status,
        "created": created,
    }


def write_manifest(out_dir, manifest: dict) -> None:
    write_json(Path(out_dir) / "manifest.json", manifest)


def verify_bundle(out_dir) -> dict:
    """Re-hash every file listed in the bundle manifest.

    Raises IntegrityError on the first mismatch or missing file; returns
    the manifest on success.
    """
    out_dir = Path(out_dir)
    manifest = read_json(out_dir / "manifest.json")
    for entry in manifest["files"]:
        p = out_dir / entry["path"]
        if not p.exists():
            raise IntegrityError(f"{p}: listed in manifest but missing")
        actual = sha256_file(p)
        if actual != entry["sha256"]:
            raise IntegrityError(
                f"{p}: sha256 {actual} does not match manifest entry {entry['sha256']}"
            )
    return manifest
