from pathlib import Path

import cv2
import numpy as np
import pytest
from skimage.data import astronaut

FPS = 10.0
SIZE = 512


def _write_avi(path: Path, frames: list[np.ndarray], fps: float = FPS) -> Path:
    writer = cv2.VideoWriter(
        str(path),
        cv2.VideoWriter_fourcc(*"MJPG"),
        fps,
        (SIZE, SIZE),
    )
    assert writer.isOpened()
    try:
        for frame in frames:
            writer.write(frame)
    finally:
        writer.release()
    return path


@pytest.fixture(scope="session")
def face_frame() -> np.ndarray:
    rgb = astronaut()
    return cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR)


@pytest.fixture(scope="session")
def face_clip(tmp_path_factory, face_frame) -> Path:
    path = tmp_path_factory.mktemp("clips") / "face.avi"
    return _write_avi(path, [face_frame] * 12)


@pytest.fixture(scope="session")
def blank_clip(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("clips") / "blank.avi"
    black = np.zeros((SIZE, SIZE, 3), dtype=np.uint8)
    return _write_avi(path, [black] * 12)
