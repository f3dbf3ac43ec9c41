"""JSON instance files and CSV reports.

Instance files are UTF-8 JSON with complex entries as ``[re, im]`` pairs in
row-major nested arrays. Decoded matrices are kept exactly as read so that a
load/dump cycle is bit-exact; validation happens on a copy.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .info import CqEnsemble
from .linalg import density, hermitian

KINDS = ("cq_channel", "cq_ensemble", "bipartite_state", "quantum_channel")


class InstanceError(ValueError):
    pass


def decode_matrix(rows) -> np.ndarray:
    try:
        arr = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"malformed matrix: {exc}") from None
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise InstanceError("matrices must be nested arrays of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def encode_matrix(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


@dataclass
class Instance:
    kind: str
    dims: list
    prior: np.ndarray | None = None
    states: list = field(default_factory=list)
    kraus: list = field(default_factory=list)
    assist_dims: list | None = None
    assist_state: np.ndarray | None = None
    version: int = 1

    def ensemble(self) -> CqEnsemble:
        if self.kind not in {"cq_channel", "cq_ensemble"}:
            raise InstanceError(f"expected a c-q channel or ensemble, got {self.kind}")
        prior = self.prior if self.prior is not None else np.full(len(self.states), 1.0 / len(self.states))
        return CqEnsemble(prior, self.states)

    def input_ensemble(self) -> CqEnsemble:
        if self.kind != "quantum_channel" or not self.states:
            raise InstanceError("expected a quantum channel with an input ensemble")
        prior = self.prior if self.prior is not None else np.full(len(self.states), 1.0 / len(self.states))
        return CqEnsemble(prior, self.states)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"version": self.version, "kind": self.kind, "dims": list(self.dims)}
        if self.kind == "quantum_channel":
            out["kraus"] = [encode_matrix(k) for k in self.kraus]
            if self.assist_state is not None:
                out["assist"] = {"dims": list(self.assist_dims), "state": encode_matrix(self.assist_state)}
            if self.states:
                ens: dict[str, Any] = {"states": [encode_matrix(s) for s in self.states]}
                if self.prior is not None:
                    ens["prior"] = [float(v) for v in self.prior]
                out["ensemble"] = ens
            return out
        if self.prior is not None:
            out["prior"] = [float(v) for v in self.prior]
        if self.kind == "bipartite_state":
            out["state"] = encode_matrix(self.states[0])
        else:
            out["states"] = [encode_matrix(s) for s in self.states]
        return out


def _validate(inst: Instance) -> None:
    if inst.kind in {"cq_channel", "cq_ensemble"}:
        if not inst.states:
            raise InstanceError("no states given")
        if inst.kind == "cq_ensemble" and inst.prior is None:
            raise InstanceError("cq_ensemble needs a prior")
        ens = inst.ensemble()
        if list(inst.dims) != [ens.dim]:
            raise InstanceError(f"dims {inst.dims} do not match states of dimension {ens.dim}")
    elif inst.kind == "bipartite_state":
        if len(inst.dims) != 2:
            raise InstanceError("bipartite_state needs dims [d_R, d_B]")
        rho = density(inst.states[0])
        if rho.shape[0] != inst.dims[0] * inst.dims[1]:
            raise InstanceError("state size does not match dims")
    else:
        if len(inst.dims) != 2 or not inst.kraus:
            raise InstanceError("quantum_channel needs dims [d_in, d_out] and kraus operators")
        d_in, d_out = inst.dims
        for k in inst.kraus:
            if k.shape != (d_out, d_in):
                raise InstanceError(f"Kraus operator of shape {k.shape}, expected {(d_out, d_in)}")
        s = sum(k.conj().T @ k for k in inst.kraus)
        if np.max(np.abs(s - np.eye(d_in))) > 1e-9:
            raise InstanceError("Kraus operators are not trace preserving")
        if inst.assist_state is not None:
            d_r, d_a = inst.assist_dims
            if d_a != d_in or inst.assist_state.shape[0] != d_r * d_a:
                raise InstanceError("assisting state does not match the channel input")
            density(inst.assist_state)
        if inst.states:
            ens = inst.input_ensemble()
            if ens.dim != d_in:
                raise InstanceError("input ensemble does not match the channel input")


def instance_from_dict(obj: dict) -> Instance:
    if not isinstance(obj, dict):
        raise InstanceError("instance must be a JSON object")
    if obj.get("version") != 1:
        raise InstanceError(f"unsupported version {obj.get('version')!r}")
    kind = obj.get("kind")
    if kind not in KINDS:
        raise InstanceError(f"unknown kind {kind!r}")
    dims = obj.get("dims")
    if not isinstance(dims, list) or not all(isinstance(d, int) and d > 0 for d in dims):
        raise InstanceError("dims must be a list of positive integers")
    inst = Instance(kind=kind, dims=dims)
    try:
        if kind == "quantum_channel":
            inst.kraus = [decode_matrix(k) for k in obj["kraus"]]
            if "assist" in obj:
                inst.assist_dims = list(obj["assist"]["dims"])
                inst.assist_state = decode_matrix(obj["assist"]["state"])
            if "ensemble" in obj:
                inst.states = [decode_matrix(s) for s in obj["ensemble"]["states"]]
                if "prior" in obj["ensemble"]:
                    inst.prior = np.array(obj["ensemble"]["prior"], dtype=float)
        elif kind == "bipartite_state":
            inst.states = [decode_matrix(obj["state"])]
        else:
            inst.states = [decode_matrix(s) for s in obj["states"]]
            if "prior" in obj:
                inst.prior = np.array(obj["prior"], dtype=float)
    except KeyError as exc:
        raise InstanceError(f"missing field {exc}") from None
    try:
        _validate(inst)
    except InstanceError:
        raise
    except ValueError as exc:
        raise InstanceError(str(exc)) from None
    return inst


def loads(text: str) -> Instance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON: {exc}") from None
    return instance_from_dict(obj)


def dumps(inst: Instance) -> str:
    return json.dumps(inst.to_dict(), separators=(",", ":")) + "\n"


def load(path) -> tuple[Instance, str]:
    """Read an instance file; also returns the SHA-256 of its bytes."""
    with open(path, "rb") as fh:
        raw = fh.read()
    return loads(raw.decode("utf-8")), hashlib.sha256(raw).hexdigest()


def dump(inst: Instance, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(inst))


def qubit_instance(kind: str, states: Sequence[np.ndarray], prior=None) -> Instance:
    """Convenience constructor for c-q channels and ensembles."""
    states = [hermitian(s) for s in states]
    inst = Instance(kind=kind, dims=[states[0].shape[0]], states=list(states),
                    prior=None if prior is None else np.asarray(prior, dtype=float))
    _validate(inst)
    return inst


# -- CSV ----------------------------------------------------------------------------------

def fmt(x: Any) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], seed: int | None = None,
               input_sha256: str | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# tiltbound {__version__} seed={'-' if seed is None else seed} "
              f"input_sha256={input_sha256 or '-'}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} columns, header has {len(header)}")
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()
