"""Plain-text model files.

::

    canids-model 1
    num_classes 2
    class Normal
    class DoS
    input_dim 9
    hidden 1 4
    norm 2047 255
    layer 1 9 4
    <fan_in rows of fan_out weights>
    bias <fan_out values>
    ...
    end

Floats are written with 17 significant digits, so save -> load -> save is
byte-identical and the loaded parameters equal the saved ones exactly.
"""
import numpy as np

from .nncore import Model, ModelArchitecture

MAGIC = "canids-model"
VERSION = 1


class ModelFileError(ValueError):
    pass


class CorruptFile(ModelFileError):
    pass


class VersionUnsupported(ModelFileError):
    pass


class ShapeMismatch(ModelFileError):
    pass


def _f(v) -> str:
    return "%.17g" % v


def dumps(model: Model) -> str:
    arch = model.arch
    out = [f"{MAGIC} {VERSION}", f"num_classes {arch.num_classes}"]
    out += [f"class {name}" for name in model.class_names]
    out.append(f"input_dim {arch.input_dim}")
    out.append("hidden " + " ".join(str(v) for v in (arch.num_hidden,) + arch.hidden_widths))
    out.append("norm " + " ".join(_f(v) for v in model.norm_denominators))
    for i, (W, b) in enumerate(model.layers(), start=1):
        out.append(f"layer {i} {W.shape[0]} {W.shape[1]}")
        out += [" ".join(_f(v) for v in row) for row in W]
        out.append("bias " + " ".join(_f(v) for v in b))
    out.append("end")
    return "\n".join(out) + "\n"


def save_model(model: Model, path, class_names=None):
    if class_names is not None:
        model = Model(model.arch, model.params, tuple(class_names), model.norm_denominators)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(dumps(model))


class _Lines:
    def __init__(self, text):
        self.lines = text.split("\n")
        self.i = 0

    def next(self, what):
        while self.i < len(self.lines):
            line = self.lines[self.i]
            self.i += 1
            if line:
                return line
        raise CorruptFile(f"unexpected end of file while reading {what}")

    def keyed(self, key):
        line = self.next(key)
        head, _, rest = line.partition(" ")
        if head != key:
            raise CorruptFile(f"expected {key!r}, found {line[:40]!r}")
        return rest


def _ints(text, what):
    try:
        return [int(t) for t in text.split()]
    except ValueError:
        raise CorruptFile(f"bad integer field in {what}: {text!r}") from None


def _one_int(text, what):
    vals = _ints(text, what)
    if len(vals) != 1:
        raise CorruptFile(f"{what} needs exactly one integer")
    return vals[0]


def _floats(text, what):
    try:
        vals = np.array([float(t) for t in text.split()], dtype=np.float64)
    except ValueError:
        raise CorruptFile(f"bad number in {what}") from None
    if not np.all(np.isfinite(vals)):
        raise CorruptFile(f"non-finite value in {what}")
    return vals


def loads(text: str) -> Model:
    if not text.rstrip("\n").endswith("\nend"):
        raise CorruptFile("missing end marker (truncated file?)")
    src = _Lines(text)
    head = src.next("header").split()
    if len(head) != 2 or head[0] != MAGIC:
        raise CorruptFile("not a canids model file")
    if head[1] != str(VERSION):
        raise VersionUnsupported(f"model file version {head[1]} (supported: {VERSION})")
    c = _one_int(src.keyed("num_classes"), "num_classes")
    names = tuple(src.keyed("class") for _ in range(c))
    d = _one_int(src.keyed("input_dim"), "input_dim")
    hidden = _ints(src.keyed("hidden"), "hidden")
    if not hidden or hidden[0] != len(hidden) - 1:
        raise ShapeMismatch(f"hidden count {hidden[:1]} disagrees with {len(hidden) - 1} widths")
    den = _floats(src.keyed("norm"), "norm")
    if den.size != 2:
        raise CorruptFile("norm needs two denominators")
    try:
        arch = ModelArchitecture(d, c, tuple(hidden[1:]) + (c,))
    except ValueError as exc:
        raise ShapeMismatch(str(exc)) from None
    chunks = []
    for i, (fi, fo) in enumerate(arch.shapes(), start=1):
        hdr = _ints(src.keyed("layer"), "layer")
        if hdr != [i, fi, fo]:
            raise ShapeMismatch(f"layer header {hdr} does not match declared shape {[i, fi, fo]}")
        for r in range(fi):
            row = src.next(f"layer {i} row {r}")
            if row.startswith("bias"):
                raise ShapeMismatch(f"layer {i} has {r} weight rows, expected {fi}")
            vals = _floats(row, f"layer {i} row {r}")
            if vals.size != fo:
                raise ShapeMismatch(f"layer {i} row {r} has {vals.size} values, expected {fo}")
            chunks.append(vals)
        bias = src.next(f"layer {i} bias")
        if not bias.startswith("bias "):
            raise ShapeMismatch(f"layer {i} has more than {fi} weight rows")
        vals = _floats(bias[5:], f"layer {i} bias")
        if vals.size != fo:
            raise ShapeMismatch(f"layer {i} bias has {vals.size} values, expected {fo}")
        chunks.append(vals)
    tail = src.next("end marker")
    if tail != "end":
        raise ShapeMismatch(f"unexpected content after the last layer: {tail[:40]!r}")
    try:
        return Model(arch, np.concatenate(chunks), names, tuple(float(v) for v in den))
    except ValueError as exc:
        raise ShapeMismatch(str(exc)) from None


def load_model(path) -> Model:
    try:
        with open(path, encoding="ascii") as fh:
            text = fh.read()
    except UnicodeDecodeError:
        raise CorruptFile(f"{path} is not an ASCII model file") from None
    return loads(text)
