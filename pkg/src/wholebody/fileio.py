"""Text file formats.

Every file is a JSON document with a ``format`` tag and an integer
``version``.  Documents are schema-checked (unknown fields are rejected)
before anything is built from them, so a malformed file never loads
partially.  Floats are written with ``repr`` precision, which makes
save/load round trips exact and repeated runs byte-identical.
"""

import json

import jsonschema
import numpy as np

from .camera import WeakPerspectiveCamera
from .errors import DimensionMismatch, ModelFormatError, WholeBodyError
from .model import PARTS, KinematicTree, ModelTemplate, PoseState
from .parts import PartEstimate

VERSION = 1

# ---------------------------------------------------------------- schemas

_NUM = {"type": "number"}
_INT = {"type": "integer"}
_NAT = {"type": "integer", "minimum": 0}


def _vec(n, item=_NUM):
    return {"type": "array", "items": item, "minItems": n, "maxItems": n}


def _arr(item):
    return {"type": "array", "items": item}


def _obj(props, required=None):
    return {
        "type": "object",
        "properties": props,
        "required": list(props) if required is None else required,
        "additionalProperties": False,
    }


def _header(tag):
    return {"format": {"const": tag}, "version": {"const": VERSION}}


_TRIPLET = {"type": "array", "prefixItems": [_NAT, _NAT, _NUM], "minItems": 3, "maxItems": 3}
_PART = {"enum": list(PARTS)}

MODEL_SCHEMA = _obj(
    {
        **_header("wholebody-model"),
        "counts": _obj({"vertices": _NAT, "joints": _NAT, "keypoints": _NAT, "shape": _NAT, "expression": _NAT}),
        "joints": _arr(_obj({"name": {"type": "string"}, "parent": _INT, "part": _PART,
                             "limits": _vec(3, _vec(2))})),  # fmt: skip
        "keypoints": _arr(_obj({"name": {"type": "string"}, "joint": _NAT})),
        "vertices": _arr(_vec(3)),
        "shape_basis": _arr(_vec(3, _arr(_NUM))),
        "expression_basis": _arr(_vec(3, _arr(_NUM))),
        "skinning_weights": _arr(_TRIPLET),
        "joint_regressor": _arr(_TRIPLET),
        "part_vertices": {"type": "object", "propertyNames": _PART, "additionalProperties": _arr(_NAT)},
    }
)

_CAMERA = _obj({"scale": {"type": "number", "exclusiveMinimum": 0}, "translation": _vec(2)})
_POSE = _obj(
    {"global_orient": _vec(3), "joint_rotations": _arr(_vec(3)), "shape": _arr(_NUM), "expression": _arr(_NUM)}
)
_ESTIMATE = _obj(
    {
        "global_orient": _vec(3),
        "pose": _arr(_vec(3)),
        "shape": _arr(_NUM),
        "camera": _CAMERA,
        "keypoints2d": _arr(_vec(3)),
        "expression": _arr(_NUM),
    },
    required=["global_orient", "pose", "shape", "camera"],
)

ESTIMATES_SCHEMA = _obj(
    {
        **_header("wholebody-estimates"),
        "frames": _arr(
            _obj(
                {
                    "frame": {"type": ["integer", "string"]},
                    "image_width": {"type": "number"},
                    "keypoints2d": _arr(_vec(3)),
                    "estimates": {"type": "object", "propertyNames": _PART, "additionalProperties": _ESTIMATE},
                },
                required=["frame", "estimates"],
            )
        ),
    }
)

POSES_SCHEMA = _obj(
    {
        **_header("wholebody-poses"),
        "frames": _arr(
            _obj(
                {
                    "frame": {"type": ["integer", "string"]},
                    "pose": _POSE,
                    "camera": _CAMERA,
                    "provenance": {"type": "object", "additionalProperties": {"type": "string"}},
                    "report": {"type": "object"},
                },
                required=["frame", "pose"],
            )
        ),
    }
)

WRISTNET_SCHEMA = _obj(
    {
        **_header("wholebody-wristnet"),
        "dims": _arr(_NAT),
        "activation": {"enum": ["relu", "tanh"]},
        "weights": _arr(_arr(_arr(_NUM))),
        "biases": _arr(_arr(_NUM)),
    }
)

WRIST_DATA_SCHEMA = _obj(
    {
        **_header("wholebody-wrist-data"),
        "side": {"enum": ["left", "right"]},
        "failed": _NAT,
        "meta": {"type": "object"},
        "columns": _obj(
            {
                k: _arr({})
                for k in ("inputs", "targets", "global_orient", "joint_rotations", "shape", "camera",
                          "target_wrist2d", "cost_before", "cost_after")  # fmt: skip
            }
        ),
    }
)


# ---------------------------------------------------------------- helpers


def _location(path):
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<document>"


def _validate(doc, schema):
    err = jsonschema.exceptions.best_match(jsonschema.Draft202012Validator(schema).iter_errors(doc))
    if err is not None:
        raise ModelFormatError(err.message, _location(err.absolute_path))


def _parse(text, source):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON ({exc.msg}) at line {exc.lineno} column {exc.colno}", source) from None


def read_document(path, schema):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelFormatError(f"cannot read file: {exc.strerror}", str(path)) from None
    doc = _parse(text, str(path))
    _validate(doc, schema)
    return doc


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def dumps(doc):
    """One top-level field per line; values compact.  Deterministic."""
    doc = _plain(doc)
    lines = [f"{json.dumps(k)}: {json.dumps(v, allow_nan=False)}" for k, v in doc.items()]
    return "{\n" + ",\n".join(lines) + "\n}\n"


def write_document(path, doc):
    text = dumps(doc)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dense(triplets, shape, loc):
    out = np.zeros(shape)
    for n, (i, j, w) in enumerate(triplets):
        if i >= shape[0] or j >= shape[1]:
            raise ModelFormatError(f"index ({i}, {j}) outside {shape}", f"{loc}[{n}]")
        out[i, j] += w
    return out


def _triplets(M):
    rows, cols = np.nonzero(M)
    return [[int(i), int(j), float(M[i, j])] for i, j in zip(rows, cols)]


def _expect_len(doc, key, n):
    if len(doc[key]) != n:
        raise ModelFormatError(f"has {len(doc[key])} entries, counts say {n}", key)


def _basis(rows, V, n, loc):
    if n == 0:
        return np.zeros((V, 3, 0))
    _expect_len({loc: rows}, loc, V)
    for v, row in enumerate(rows):
        for a, comp in enumerate(row):
            if len(comp) != n:
                raise ModelFormatError(f"expected {n} coefficients, got {len(comp)}", f"{loc}[{v}][{a}]")
    return np.array(rows, dtype=float).reshape(V, 3, n)


# ---------------------------------------------------------------- model


def model_to_document(template):
    t = template
    names, parents, tags = t.tree.joint_names, t.tree.parent, t.tree.part_tags
    return {
        "format": "wholebody-model",
        "version": VERSION,
        "counts": {"vertices": t.num_vertices, "joints": t.num_joints, "keypoints": t.num_keypoints,
                   "shape": t.num_shape, "expression": t.num_expression},  # fmt: skip
        "joints": [
            {"name": names[j], "parent": int(parents[j]), "part": tags[j], "limits": t.angle_limits[j]}
            for j in range(t.num_joints)
        ],
        "keypoints": [{"name": n, "joint": int(j)} for n, j in zip(t.keypoint_names, t.keypoint_joint)],
        "vertices": t.rest_vertices,
        "shape_basis": t.shape_basis if t.num_shape else [],
        "expression_basis": t.expression_basis if t.num_expression else [],
        "skinning_weights": _triplets(t.skinning_weights),
        "joint_regressor": _triplets(t.joint_regressor),
        "part_vertices": {k: v for k, v in sorted(t.part_vertices.items())},
    }


def model_from_document(doc):
    _validate(doc, MODEL_SCHEMA)
    c = doc["counts"]
    V, J, K, B, E = c["vertices"], c["joints"], c["keypoints"], c["shape"], c["expression"]
    for key, n in (("joints", J), ("keypoints", K), ("vertices", V)):
        _expect_len(doc, key, n)
    joints = doc["joints"]
    tree = KinematicTree(
        np.array([j["parent"] for j in joints], dtype=np.int64),
        [j["name"] for j in joints],
        [j["part"] for j in joints],
    )
    return ModelTemplate(
        rest_vertices=np.array(doc["vertices"], dtype=float).reshape(V, 3),
        shape_basis=_basis(doc["shape_basis"], V, B, "shape_basis"),
        expression_basis=_basis(doc["expression_basis"], V, E, "expression_basis"),
        skinning_weights=_dense(doc["skinning_weights"], (V, J), "skinning_weights"),
        joint_regressor=_dense(doc["joint_regressor"], (K, V), "joint_regressor"),
        tree=tree,
        keypoint_names=[k["name"] for k in doc["keypoints"]],
        keypoint_joint=np.array([k["joint"] for k in doc["keypoints"]], dtype=np.int64).reshape(K),
        angle_limits=np.array([j["limits"] for j in joints], dtype=float).reshape(J, 3, 2),
        part_vertices={k: np.array(v, dtype=np.int64) for k, v in doc["part_vertices"].items()},
    )


def save_model(template, path):
    write_document(path, model_to_document(template))


def load_model(path):
    """Load and fully validate a model file; raises ``ModelFormatError`` with a field location."""
    doc = read_document(path, MODEL_SCHEMA)
    try:
        return model_from_document(doc)
    except ModelFormatError:
        raise
    except (WholeBodyError, ValueError) as exc:
        raise ModelFormatError(str(exc), str(path)) from None


def models_equal(a, b):
    """Structural equality of two templates (exact)."""
    same = (
        a.tree.joint_names == b.tree.joint_names
        and a.tree.part_tags == b.tree.part_tags
        and a.keypoint_names == b.keypoint_names
        and sorted(a.part_vertices) == sorted(b.part_vertices)
    )
    arrays = ["rest_vertices", "shape_basis", "expression_basis", "skinning_weights", "joint_regressor",
              "keypoint_joint", "angle_limits"]  # fmt: skip
    return (
        same
        and np.array_equal(a.tree.parent, b.tree.parent)
        and all(np.array_equal(getattr(a, k), getattr(b, k)) for k in arrays)
        and all(np.array_equal(a.part_vertices[k], b.part_vertices[k]) for k in a.part_vertices)
    )


# ---------------------------------------------------------------- poses and estimates


def camera_to_dict(cam):
    return {"scale": cam.scale, "translation": cam.translation}


def camera_from_dict(d):
    return WeakPerspectiveCamera(d["scale"], d["translation"])


def pose_to_dict(pose):
    return {
        "global_orient": pose.global_orient,
        "joint_rotations": pose.joint_rotations,
        "shape": pose.shape,
        "expression": pose.expression,
    }


def pose_from_dict(d):
    return PoseState(d["global_orient"], np.array(d["joint_rotations"], dtype=float).reshape(-1, 3),
                     d["shape"], d["expression"])  # fmt: skip


def estimate_to_dict(est):
    out = {
        "global_orient": est.global_orient,
        "pose": est.pose,
        "shape": est.shape,
        "camera": camera_to_dict(est.camera),
    }
    if est.keypoints2d is not None:
        out["keypoints2d"] = est.keypoints2d
    if est.expression is not None:
        out["expression"] = est.expression
    return out


def estimate_from_dict(part, d):
    return PartEstimate(
        part,
        d["global_orient"],
        np.array(d["pose"], dtype=float).reshape(-1, 3),
        d["shape"],
        camera_from_dict(d["camera"]),
        keypoints2d=None if "keypoints2d" not in d else np.array(d["keypoints2d"], dtype=float).reshape(-1, 3),
        expression=d.get("expression"),
    )


class Frame:
    """One frame of part estimates plus optional whole-body 2D keypoints."""

    def __init__(self, frame, estimates, keypoints2d=None, image_width=None):
        self.frame = frame
        self.estimates = dict(estimates)
        self.keypoints2d = None if keypoints2d is None else np.asarray(keypoints2d, dtype=float).reshape(-1, 3)
        self.image_width = image_width


def save_estimates(frames, path):
    write_document(path, estimates_document(frames))


def estimates_document(frames):
    doc = {"format": "wholebody-estimates", "version": VERSION, "frames": []}
    for f in frames:
        rec = {"frame": f.frame}
        if f.image_width is not None:
            rec["image_width"] = f.image_width
        if f.keypoints2d is not None:
            rec["keypoints2d"] = f.keypoints2d
        rec["estimates"] = {p: estimate_to_dict(e) for p, e in f.estimates.items()}
        doc["frames"].append(rec)
    return doc


def load_estimates(path):
    doc = read_document(path, ESTIMATES_SCHEMA)
    frames = []
    for i, rec in enumerate(doc["frames"]):
        try:
            ests = {p: estimate_from_dict(p, e) for p, e in rec["estimates"].items()}
        except (WholeBodyError, ValueError) as exc:
            raise ModelFormatError(str(exc), f"frames[{i}]") from None
        frames.append(Frame(rec["frame"], ests, rec.get("keypoints2d"), rec.get("image_width")))
    return frames


def save_poses(records, path):
    write_document(path, poses_document(records))


def poses_document(records):
    """``records``: dicts with ``frame``, ``pose`` and optional ``camera``/``provenance``/``report``."""
    doc = {"format": "wholebody-poses", "version": VERSION, "frames": []}
    for r in records:
        rec = {"frame": r["frame"], "pose": pose_to_dict(r["pose"])}
        if r.get("camera") is not None:
            rec["camera"] = camera_to_dict(r["camera"])
        if r.get("provenance"):
            rec["provenance"] = r["provenance"]
        if r.get("report"):
            rec["report"] = r["report"]
        doc["frames"].append(rec)
    return doc


def load_poses(path, template=None):
    doc = read_document(path, POSES_SCHEMA)
    out = []
    for i, rec in enumerate(doc["frames"]):
        pose = pose_from_dict(rec["pose"])
        if template is not None:
            try:
                pose.check(template)
            except DimensionMismatch as exc:
                raise ModelFormatError(str(exc), f"frames[{i}].pose") from None
        out.append(
            {
                "frame": rec["frame"],
                "pose": pose,
                "camera": camera_from_dict(rec["camera"]) if "camera" in rec else None,
                "provenance": rec.get("provenance", {}),
                "report": rec.get("report"),
            }
        )
    return out


# ---------------------------------------------------------------- wrist network and data


def save_wristnet(net, path):
    write_document(path, wristnet_document(net))


def wristnet_document(net):
    return {"format": "wholebody-wristnet", "version": VERSION, "dims": list(net.dims),
            "activation": net.activation, "weights": net.weights, "biases": net.biases}  # fmt: skip


def load_wristnet(path):
    from .wristnet import DIMS, WristNet

    doc = read_document(path, WRISTNET_SCHEMA)
    dims = doc["dims"]
    if tuple(dims) != DIMS:
        raise ModelFormatError(f"expected layer sizes {list(DIMS)}, got {dims}", "dims")
    weights, biases = [], []
    for i, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
        w = np.array(doc["weights"][i], dtype=float) if i < len(doc["weights"]) else np.zeros(0)
        bb = np.array(doc["biases"][i], dtype=float) if i < len(doc["biases"]) else np.zeros(0)
        if w.shape != (a, b):
            raise ModelFormatError(f"expected shape {(a, b)}, got {w.shape}", f"weights[{i}]")
        if bb.shape != (b,):
            raise ModelFormatError(f"expected shape {(b,)}, got {bb.shape}", f"biases[{i}]")
        weights.append(w)
        biases.append(bb)
    return WristNet(weights, biases, doc["activation"])


_DATA_COLUMNS = ("inputs", "targets", "global_orient", "joint_rotations", "shape", "camera",
                 "target_wrist2d", "cost_before", "cost_after")  # fmt: skip


def save_wrist_dataset(ds, path):
    write_document(path, wrist_dataset_document(ds))


def wrist_dataset_document(ds):
    return {"format": "wholebody-wrist-data", "version": VERSION, "side": ds.side, "failed": ds.failed,
            "meta": ds.meta, "columns": {k: getattr(ds, k) for k in _DATA_COLUMNS}}  # fmt: skip


def load_wrist_dataset(path, template=None):
    from .wristnet import WristDataset

    doc = read_document(path, WRIST_DATA_SCHEMA)
    cols = {k: np.array(v, dtype=float) for k, v in doc["columns"].items()}
    n = len(cols["inputs"])
    widths = {"inputs": 8, "targets": 6, "global_orient": 3, "camera": 3, "target_wrist2d": 2}
    for k in _DATA_COLUMNS:
        if len(cols[k]) != n:
            raise ModelFormatError(f"has {len(cols[k])} rows, inputs has {n}", f"columns.{k}")
        if k in widths and n and cols[k].shape[1:] != (widths[k],):
            raise ModelFormatError(f"rows must have {widths[k]} values", f"columns.{k}")
    if n == 0:
        cols["inputs"] = cols["inputs"].reshape(0, 8)
        cols["targets"] = cols["targets"].reshape(0, 6)
    if template is not None and n:
        if cols["joint_rotations"].shape[1:] != (template.num_joints - 1, 3):
            raise ModelFormatError("joint rotations do not match the model", "columns.joint_rotations")
        if cols["shape"].shape[1:] != (template.num_shape,):
            raise ModelFormatError("shape coefficients do not match the model", "columns.shape")
    return WristDataset(**cols, failed=doc["failed"], side=doc["side"], meta=doc["meta"])
