# %% [markdown]
# # Three regularizers
#
# * a confidence penalty on the gold sequence probability,
# * annealed Gaussian noise on the gradients,
# * zoneout on the recurrent states.

# %%
import math

import numpy as np

from nertagger import tensor as tn
from nertagger.crf import CrfParams, log_likelihood, penalized_loss
from nertagger.encoder import LstmCell, ZoneoutConfig, zoneout_step
from nertagger.optim import NoisySGD
from nertagger.tensor import Tensor

# %% [markdown]
# ## Confidence penalty
# With `beta = 0` the loss is the plain negative log-likelihood.  For
# `beta > 0` it grows with `-p * log p`, which is largest when the model is
# unsure and zero when it is certain.

# %%
crf = CrfParams.zeros(2, 1)
for strength in (0.0, 2.0, 20.0):
    em = Tensor([[strength, 0.0], [0.0, strength]])
    ll = log_likelihood(crf, em, [0, 1]).item()
    row = [penalized_loss(crf, em, [0, 1], b).item() for b in (0.0, 1.0, 2.0)]
    print(f"p(gold)={math.exp(ll):.3f}  loss at beta 0/1/2: " + " ".join(f"{v:.4f}" for v in row))

# %% [markdown]
# ## Gradient noise
# The standard deviation decays as `sqrt(eta / (1 + t)**gamma)`.

# %%
opt = NoisySGD([Tensor([0.0], True)], eta=0.3, gamma=0.55, rng=np.random.default_rng(0))
for t in (0, 1, 10, 100, 1000):
    print(t, round(opt.noise_std(t), 5))

# %% [markdown]
# ## Zoneout
# In training each unit keeps its previous value with probability `z`.
# At evaluation time the step returns the expectation instead.

# %%
rng = np.random.default_rng(3)
cell = LstmCell.init(3, 2, rng)
x, h, c = Tensor(rng.normal(size=3)), Tensor(rng.normal(size=2)), Tensor(rng.normal(size=2))
cfg = ZoneoutConfig(0.5, 0.5)
with tn.no_grad():
    draws = np.array([zoneout_step(cell, cfg, x, h, c, rng)[1].data for _ in range(20000)])
    expected = zoneout_step(cell, cfg.eval(), x, h, c)[1].data
print("Monte-Carlo mean:", draws.mean(axis=0))
print("eval-mode value :", expected)
