"""Orchestration for long-form storytelling video: hierarchical planning,
location-grounded keyframes, alternating narrative/transition clip scheduling,
a synthetic transition dataset pipeline, and consistency metrics.

All generative models sit behind a small HTTP wire protocol; the bundled mock
backends make every stage runnable and byte-reproducible on a desk machine.
"""

__version__ = "0.1.0"
