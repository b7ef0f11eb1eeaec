"""Train the reduced pipeline to tell two motion directions apart.

Two event clouds drift in opposite directions; a least-squares objective
pushes the mean of each scattered grid toward +1 or -1.  Every stage —
fusion, serialization, attention, scatter — carries gradients.
"""

from pathlib import Path

import numpy as np

from omnievent.blocks import params_of
from omnievent.config import load_config
from omnievent.events import fuse, make_events, sample_and_normalize
from omnievent.optim import Adam
from omnievent.pipeline import PipelineParams, pipeline_forward
from omnievent.tensorize import scatter

cfg = load_config(Path(__file__).with_name("reduced.cfg").read_text())


def drifting_blob(direction, seed, n=400):
    gen = np.random.default_rng(seed)
    t = np.sort(gen.uniform(0, 1, n))
    w = np.clip(np.round(16 + direction * (t - 0.5) * 20 + gen.normal(0, 1.5, n)), 0, 31)
    h = np.clip(np.round(16 + gen.normal(0, 1.5, n)), 0, 31)
    return make_events(t, h.astype(int), w.astype(int), gen.choice([-1, 1], n))


batches = [
    sample_and_normalize(fuse(drifting_blob(d, s), cfg.T), cfg.M, cfg.geometry,
                         cfg.seed, T=cfg.T)
    for d, s in ((+1, 21), (-1, 22))
]
targets = (+1.0, -1.0)

params = PipelineParams.from_config(cfg, dtype=np.float64)
opt = Adam(params_of(params), lr=1e-2)

for step in range(40):
    opt.zero_grad()
    loss = None
    preds = []
    for batch, target in zip(batches, targets):
        feats = pipeline_forward(batch, cfg, params)
        grid = scatter(batch, feats, reduce=cfg.reduce, pre_map=params.pre_map)
        d = grid.mean() - target
        preds.append(float(grid.mean().data))
        loss = d * d if loss is None else loss + d * d
    loss.backward()
    opt.step()
    if step % 8 == 0 or step == 39:
        print(f"step {step:>3}: loss {float(loss.data):.4f}  "
              f"preds ({preds[0]:+.3f}, {preds[1]:+.3f})")

print("the two classes separate toward their targets")
