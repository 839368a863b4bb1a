"""
Label conventions shared by the data pipeline, network and losses.
"""

from typing import List

LIVE = 1
SPOOF = 0

# Face parsing labels; index = pixel value in parsing masks.
PARSING_LABELS: List[str] = [
    "background",
    "skin",
    "left_brow",
    "right_brow",
    "left_eye",
    "right_eye",
    "eyeglasses",
    "left_ear",
    "right_ear",
    "nose",
    "mouth",
    "upper_lip",
    "lower_lip",
]
N_PARSING_CLASSES = len(PARSING_LABELS)

# Side length of depth ground truth and depth predictions.
DEPTH_SIZE = 32

SPLITS = ("train", "dev", "test")
