"""Serialization and shift pooling: the hierarchy under the encoder.

Points are quantized to curve cells, sorted by code, cut into patches
for attention, and merged by right-shifting codes — each shift of y
multiplies the receptive field by 2^y.
"""

import numpy as np

from omnievent.serialize import (
    BranchConfig,
    grid_pool,
    receptive_field,
    serialize,
    unpool,
)

gen = np.random.default_rng(7)
pts = gen.uniform(0.0, 1.0, (2000, 5))  # normalized (x1, x2, t, p_acc, c)

branch = BranchConfig(branch="ST", orders=("hilbert",))
order = branch.order_for("hilbert")
ser = serialize(pts, order, branch, patch_size=256)
print(f"{ser.n_points} points -> {ser.n_patches} patches of <=256 along "
      f"{order.kind} (bits={order.bits})")

features = pts[:, :2].copy()
for y in (3, 5, 8):
    pooled, pm = grid_pool(ser, features, y)
    print(f"shift y={y}: {pm.n_groups:>5} groups "
          f"(mean {ser.n_points / pm.n_groups:.1f} points each)")

# unpool broadcasts each group's feature back to its members
pooled, pm = grid_pool(ser, features, 5)
back = unpool(pooled, pm)
assert back.shape == features.shape
owners = pooled[pm.group_id]
assert np.array_equal(back, owners)
print("unpool returns every member its group maximum")

print("\nreceptive field growth for patch 512:")
for levels in range(4):
    print(f"  after {levels} shift-5 poolings: {receptive_field(512, 5, levels):>9} points")
