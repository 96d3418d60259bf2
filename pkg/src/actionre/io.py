"""File formats: vocabulary files, frame-probability JSON Lines, manifests.

Frame-probability files are JSON Lines.  The first record names the
vocabulary, every later record is one video::

    {"vocab": ["a", "b", "c"]}
    {"id": "clip-1", "frames": [[0.9, 0.1, 0.0], [0.8, 0.7, 0.1]]}
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .detscore import Video
from .pattern import Vocabulary

__all__ = [
    "FormatError",
    "read_vocabulary",
    "read_videos",
    "write_videos",
    "dumps_videos",
]


class FormatError(ValueError):
    pass


def read_vocabulary(path) -> Vocabulary:
    """One action name per line (blank lines and ``#`` comments ignored),
    or a JSON list / ``{"vocab": [...]}`` object."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith(("[", "{")):
        data = json.loads(text)
        names = data["vocab"] if isinstance(data, dict) else data
    else:
        names = [ln.strip() for ln in text.splitlines()]
        names = [n for n in names if n and not n.startswith("#")]
    return Vocabulary(names)


def _video_record(v: Video) -> dict:
    return {"id": v.id, "frames": v.frames.tolist()}


def dumps_videos(vocab: Vocabulary, videos: Iterable[Video]) -> str:
    lines = [json.dumps({"vocab": list(vocab.names)})]
    lines.extend(json.dumps(_video_record(v)) for v in videos)
    return "\n".join(lines) + "\n"


def write_videos(path, vocab: Vocabulary, videos: Iterable[Video]) -> None:
    Path(path).write_text(dumps_videos(vocab, videos))


def read_videos(path, vocab: Vocabulary | None = None) -> tuple[Vocabulary, list[Video]]:
    """Parse a frame-probability file; check every frame has ``M`` entries.

    If ``vocab`` is given it must equal the file's header vocabulary.
    """
    header = None
    videos = []
    seen = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if header is None:
                if not isinstance(rec, dict) or "vocab" not in rec:
                    raise FormatError(f"{path}:{lineno}: first record must be {{\"vocab\": [...]}}")
                header = Vocabulary(rec["vocab"])
                if vocab is not None and vocab != header:
                    raise FormatError(f"{path}: vocabulary differs from the one supplied")
                continue
            if not isinstance(rec, dict) or "id" not in rec or "frames" not in rec:
                raise FormatError(f"{path}:{lineno}: video record needs 'id' and 'frames'")
            vid = str(rec["id"])
            if vid in seen:
                raise FormatError(f"{path}:{lineno}: duplicate video id {vid!r}")
            seen.add(vid)
            try:
                frames = np.asarray(rec["frames"], dtype=np.float64)
            except (TypeError, ValueError):
                raise FormatError(f"{path}:{lineno}: frames must be numeric") from None
            if frames.ndim != 2 or frames.shape[0] == 0:
                raise FormatError(f"{path}:{lineno}: frames must be a non-empty list of rows")
            if frames.shape[1] != len(header):
                raise FormatError(
                    f"{path}:{lineno}: video {vid!r} has {frames.shape[1]} actions per frame, "
                    f"vocabulary has {len(header)}"
                )
            try:
                videos.append(Video(vid, frames))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    if header is None:
        raise FormatError(f"{path}: empty file")
    return header, videos
