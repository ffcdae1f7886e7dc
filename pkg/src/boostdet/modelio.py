"""Versioned text format for trained models.

One stage per line, fields named, floats printed with repr so a
save/load round trip reproduces predictions exactly. The format is
line-oriented and human-diffable; parse errors name their line.
"""

from __future__ import annotations

from .boosting import Stage, StrongClassifier, WeakClassifier
from .features import (
    CANONICAL_H,
    CANONICAL_W,
    ChainFeature,
    ControlPointsFeature,
    Feature,
    FeatureKind,
    HaarFeature,
    SymmetricHaarFeature,
    kind_of,
)
from .imaging import Rect

FORMAT_VERSION = 1
MAGIC = "boostdet-model"


class ModelFormatError(ValueError):
    """Malformed model file; the message names the offending line."""


def _rect_str(r: Rect) -> str:
    return f"{r.x},{r.y},{r.w},{r.h}"


def _parse_rect(text: str, where: str) -> Rect:
    parts = text.split(",")
    if len(parts) != 4:
        raise ModelFormatError(f"{where}: rect needs 4 comma-separated integers, got {text!r}")
    try:
        x, y, w, h = (int(p) for p in parts)
        return Rect(x=x, y=y, w=w, h=h)
    except ValueError as exc:
        raise ModelFormatError(f"{where}: {exc}") from None


def _points_str(points) -> str:
    return ";".join(f"{x}:{y}" for x, y in points)


def _parse_points(text: str, where: str) -> tuple[tuple[int, int], ...]:
    points = []
    for item in text.split(";"):
        try:
            x, y = item.split(":")
            points.append((int(x), int(y)))
        except ValueError:
            raise ModelFormatError(f"{where}: bad point {item!r}") from None
    return tuple(points)


def _chain_str(chain) -> str:
    return ";".join(f"{x}:{y}:{'+' if t else '-'}" for x, y, t in chain)


def _parse_chain(text: str, where: str) -> tuple[tuple[int, int, bool], ...]:
    chain = []
    for item in text.split(";"):
        parts = item.split(":")
        if len(parts) != 3 or parts[2] not in ("+", "-"):
            raise ModelFormatError(f"{where}: bad chain point {item!r}")
        try:
            chain.append((int(parts[0]), int(parts[1]), parts[2] == "+"))
        except ValueError:
            raise ModelFormatError(f"{where}: bad chain point {item!r}") from None
    return tuple(chain)


def _feature_fields(feature: Feature) -> list[tuple[str, str]]:
    if isinstance(feature, HaarFeature):
        return [("a", _rect_str(feature.rect_a)), ("b", _rect_str(feature.rect_b)),
                ("t", repr(feature.threshold))]
    if isinstance(feature, ControlPointsFeature):
        return [("pos", _points_str(feature.pos_points)),
                ("neg", _points_str(feature.neg_points)),
                ("v", str(feature.separation))]
    if isinstance(feature, SymmetricHaarFeature):
        return [("la", _rect_str(feature.left_a)), ("lb", _rect_str(feature.left_b)),
                ("ma", _rect_str(feature.mid_a)), ("mb", _rect_str(feature.mid_b)),
                ("t1", repr(feature.t_left)), ("t2", repr(feature.t_right)),
                ("t3", repr(feature.t_mid)), ("td1", repr(feature.sym_tol)),
                ("td2", repr(feature.mid_margin))]
    if isinstance(feature, ChainFeature):
        return [("chain", _chain_str(feature.chain)), ("v", str(feature.separation))]
    raise TypeError(f"not a feature: {feature!r}")


def dump_model(model: StrongClassifier) -> str:
    lines = [f"{MAGIC} format={FORMAT_VERSION}",
             f"canonical {model.canonical_w} {model.canonical_h}",
             f"stages {len(model.stages)}"]
    for stage in model.stages:
        fields = [("family", kind_of(stage.weak.feature).value),
                  ("polarity", str(stage.weak.polarity)),
                  ("alpha", repr(stage.alpha))]
        fields += _feature_fields(stage.weak.feature)
        lines.append("stage " + " ".join(f"{k}={v}" for k, v in fields))
    return "\n".join(lines) + "\n"


def save_model(model: StrongClassifier, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_model(model))


def _fields_dict(tokens: list[str], where: str) -> dict[str, str]:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ModelFormatError(f"{where}: expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def _require(fields: dict[str, str], key: str, where: str) -> str:
    if key not in fields:
        raise ModelFormatError(f"{where}: missing field {key!r}")
    return fields[key]


def _parse_stage(line: str, where: str) -> Stage:
    tokens = line.split()
    fields = _fields_dict(tokens[1:], where)
    family = _require(fields, "family", where)
    try:
        kind = FeatureKind(family)
    except ValueError:
        raise ModelFormatError(f"{where}: unknown family {family!r}") from None
    try:
        polarity = int(_require(fields, "polarity", where))
        alpha = float(_require(fields, "alpha", where))
        if kind is FeatureKind.HAAR:
            feature: Feature = HaarFeature(
                rect_a=_parse_rect(_require(fields, "a", where), where),
                rect_b=_parse_rect(_require(fields, "b", where), where),
                threshold=float(_require(fields, "t", where)))
        elif kind is FeatureKind.CONTROL_POINTS:
            feature = ControlPointsFeature(
                pos_points=_parse_points(_require(fields, "pos", where), where),
                neg_points=_parse_points(_require(fields, "neg", where), where),
                separation=int(_require(fields, "v", where)))
        elif kind is FeatureKind.SYMMETRIC_HAAR:
            feature = SymmetricHaarFeature(
                left_a=_parse_rect(_require(fields, "la", where), where),
                left_b=_parse_rect(_require(fields, "lb", where), where),
                mid_a=_parse_rect(_require(fields, "ma", where), where),
                mid_b=_parse_rect(_require(fields, "mb", where), where),
                t_left=float(_require(fields, "t1", where)),
                t_right=float(_require(fields, "t2", where)),
                t_mid=float(_require(fields, "t3", where)),
                sym_tol=float(_require(fields, "td1", where)),
                mid_margin=float(_require(fields, "td2", where)))
        else:
            feature = ChainFeature(
                chain=_parse_chain(_require(fields, "chain", where), where),
                separation=int(_require(fields, "v", where)))
        return Stage(alpha=alpha, weak=WeakClassifier(feature=feature, polarity=polarity))
    except ModelFormatError:
        raise
    except ValueError as exc:
        raise ModelFormatError(f"{where}: {exc}") from None


def parse_model(text: str, source: str = "<model>") -> StrongClassifier:
    lines = text.splitlines()
    if not lines:
        raise ModelFormatError(f"{source}:1: empty model file")
    header = lines[0].split()
    if len(header) != 2 or header[0] != MAGIC or not header[1].startswith("format="):
        raise ModelFormatError(f"{source}:1: not a {MAGIC} file")
    version = header[1].removeprefix("format=")
    if version != str(FORMAT_VERSION):
        raise ModelFormatError(f"{source}:1: unsupported format version {version!r}")
    if len(lines) < 3:
        raise ModelFormatError(f"{source}: truncated header")
    canon = lines[1].split()
    if len(canon) != 3 or canon[0] != "canonical":
        raise ModelFormatError(f"{source}:2: expected 'canonical W H'")
    count_line = lines[2].split()
    if len(count_line) != 2 or count_line[0] != "stages":
        raise ModelFormatError(f"{source}:3: expected 'stages N'")
    try:
        canonical_w, canonical_h = int(canon[1]), int(canon[2])
        n_stages = int(count_line[1])
    except ValueError as exc:
        raise ModelFormatError(f"{source}: bad header number: {exc}") from None
    if (canonical_w, canonical_h) != (CANONICAL_W, CANONICAL_H):
        raise ModelFormatError(
            f"{source}:2: model uses a {canonical_w}x{canonical_h} window, "
            f"this build evaluates {CANONICAL_W}x{CANONICAL_H}")

    stages = []
    for offset, line in enumerate(lines[3:], start=4):
        if not line.strip():
            continue
        if not line.startswith("stage "):
            raise ModelFormatError(f"{source}:{offset}: expected a stage line")
        stages.append(_parse_stage(line, f"{source}:{offset}"))
    if len(stages) != n_stages:
        raise ModelFormatError(
            f"{source}: header declares {n_stages} stages, found {len(stages)}")
    return StrongClassifier(stages=tuple(stages), canonical_w=canonical_w,
                            canonical_h=canonical_h)


def load_model(path) -> StrongClassifier:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read(), source=str(path))
