# %% [markdown]
# # Linear-chain CRF: partition function and Viterbi
#
# A CRF scores a label sequence as start + emissions + transitions + stop.
# The forward algorithm sums over all sequences in log space; Viterbi finds
# the best one.  On a tiny problem both can be checked by brute force.

# %%
import itertools
import math

import numpy as np

from nertagger.crf import CrfParams, log_likelihood, log_partition, viterbi_decode
from nertagger.tensor import Tensor

rng = np.random.default_rng(1)
K, T = 3, 4
crf = CrfParams.zeros(K, 1)
crf.transitions.data[...] = rng.normal(size=(K, K))
crf.start.data[...] = rng.normal(size=K)
crf.stop.data[...] = rng.normal(size=K)
em = Tensor(rng.normal(size=(T, K)), requires_grad=True)

# %%
def score(seq):
    A, s, e, E = crf.transitions.data, crf.start.data, crf.stop.data, em.data
    total = s[seq[0]] + E[0, seq[0]] + e[seq[-1]]
    return total + sum(A[a, b] + E[t + 1, b] for t, (a, b) in enumerate(zip(seq, seq[1:])))

scores = {seq: score(seq) for seq in itertools.product(range(K), repeat=T)}
brute = math.log(sum(math.exp(v) for v in scores.values()))
print("forward algorithm :", log_partition(crf, em).item())
print("enumeration       :", brute)

# %%
path, best = viterbi_decode(crf, em)
print("viterbi:", path, best)
print("brute  :", list(max(scores, key=scores.get)), max(scores.values()))

# %% [markdown]
# The gradient of the negative log-likelihood with respect to the emissions
# is "marginal probability minus gold indicator".

# %%
gold = [0, 1, 1, 2]
(-log_likelihood(crf, em, gold)).backward()
print(np.round(em.grad, 3))
print("rows sum to zero:", np.allclose(em.grad.sum(axis=1), 0.0))
