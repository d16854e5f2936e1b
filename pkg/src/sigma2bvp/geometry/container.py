"""Self-describing container files for models and solution states.

Format (stable; version tag in the magic line):

.. code-block:: text

    sigma2bvp-container 1\\n
    <one-line JSON header>\\n
    field <name> <ndim> <d0> <d1> ...\\n
    <prod(shape) * 8 bytes of little-endian float64>\\n
    ...repeated per field...
    end\\n

The header carries the model spec parameters and any caller metadata; each
field records its shape explicitly, so readers need no out-of-band
knowledge.  Byte order is fixed little-endian regardless of platform.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import InvalidArgumentError
from .models import Model, ModelSpec, build_model

MAGIC = b"sigma2bvp-container 1\n"


def save_container(path, header: dict, fields: dict):
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for name, arr in fields.items():
            arr = np.ascontiguousarray(np.asarray(arr, dtype="<f8"))
            dims = " ".join(str(s) for s in arr.shape)
            fh.write(f"field {name} {arr.ndim} {dims}".rstrip().encode() + b"\n")
            fh.write(arr.tobytes())
            fh.write(b"\n")
        fh.write(b"end\n")


def load_container(path):
    with open(path, "rb") as fh:
        if fh.readline() != MAGIC:
            raise InvalidArgumentError(f"{path} is not a sigma2bvp container")
        header = json.loads(fh.readline().decode())
        fields = {}
        while True:
            line = fh.readline()
            if not line or line == b"end\n":
                break
            parts = line.decode().split()
            if parts[0] != "field":
                raise InvalidArgumentError(f"corrupt container record: {line!r}")
            name, ndim = parts[1], int(parts[2])
            shape = tuple(int(x) for x in parts[3:3 + ndim])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 8)
            fields[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
            fh.read(1)  # trailing newline
        return header, fields


def save_model(model: Model, path, extra_fields: dict | None = None,
               metadata: dict | None = None):
    """Write a model (and optionally solution fields) to a container."""
    header = {"spec": model.spec.header(),
              "resolution": list(model.grid.shape),
              "meta": metadata or {}}
    fields = {}
    for i, c in enumerate(model.grid.coords):
        fields[f"coord{i}"] = c
    fields["metric"] = model.metric.g
    if model.warp is not None:
        fields["warp_a"] = model.warp.a
        fields["warp_b"] = model.warp.b
    if extra_fields:
        fields.update(extra_fields)
    save_container(path, header, fields)


def load_model(path):
    """Rebuild a model from a container written by ``save_model``.

    Models are reconstructed from their spec (perturbations are seeded, so
    the rebuild is bit-identical); the stored arrays are returned alongside
    for consumers that want the raw fields.
    """
    header, fields = load_container(path)
    spec = ModelSpec.from_header(header["spec"])
    res = header["resolution"]
    model = build_model(spec, res[0] if len(res) == 1 else tuple(res))
    return model, header, fields
