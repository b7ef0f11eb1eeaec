"""Event-stream serialization and attention toolkit.

Turns raw event-camera streams into grid-shaped feature tensors via
fuse-and-sample preprocessing, space-filling-curve serialization with
hierarchical shift pooling, patch self-attention, and cross-branch
attention fusion.
"""

__version__ = "0.1.0"
