"""Cross-branch fusion: mutual enhancement rounds, then joint interaction.

The spatial and temporal operands take turns enhancing each other
(each update already sees the other's fresh state), and the joint
branch queries both results to produce the fused sequence.
"""

import numpy as np

from omnievent.autodiff import Tensor, no_grad
from omnievent.sta import StaConfig, StaParams, mutual_rounds, sta_forward

cfg = StaConfig(channels=16, seq_len=128, rounds=4, out_channels=32)
params = StaParams.from_rng(np.random.default_rng(5), cfg)

gen = np.random.default_rng(6)
f_s, f_t, f_st = (Tensor(gen.normal(size=(2, 16, 128))) for _ in range(3))

with no_grad():
    s0, t0 = f_s.data.copy(), f_t.data.copy()
    s4, t4 = mutual_rounds(f_s, f_t, params)
    print(f"operands (B, C, N) = {f_s.shape}")
    print(f"after {cfg.rounds} mutual rounds: "
          f"|ds| {np.abs(s4.data - s0).mean():.3f}, "
          f"|dt| {np.abs(t4.data - t0).mean():.3f}")

    # each round is residual, so zero rounds is the identity
    s_same, t_same = mutual_rounds(f_s, f_t, params, rounds=0)
    assert np.array_equal(s_same.data, s0) and np.array_equal(t_same.data, t0)
    print("rounds=0 leaves both operands untouched (residual updates)")

    out = sta_forward(f_s, f_t, f_st, params)
    print(f"full fusion output (B, N, 2C) = {out.shape}")
