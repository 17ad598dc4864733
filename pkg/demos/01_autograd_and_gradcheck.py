# %% [markdown]
# # A small tape-based autodiff
#
# Every operation on a `Tensor` records how to push gradients back to its
# inputs. Calling `backward()` on a scalar walks that record in reverse.

# %%
import numpy as np

from nertagger import tensor as tn
from nertagger.gradcheck import check_gradients
from nertagger.tensor import Tensor

x = Tensor([0.5, -1.0, 2.0], requires_grad=True)
y = tn.sum(x * tn.sigmoid(x))
y.backward()
print("f(x) =", y.item())
print("df/dx =", x.grad)

# %% [markdown]
# The derivative of `x * sigmoid(x)` is `s + x * s * (1 - s)`; the tape
# agrees with the closed form.

# %%
s = 1 / (1 + np.exp(-x.data))
print(np.max(np.abs(x.grad - (s + x.data * s * (1 - s)))))

# %% [markdown]
# Gradients are also checked against central finite differences.  Here a
# small matrix product goes through `logsumexp`.

# %%
rng = np.random.default_rng(0)
W = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
v = Tensor(rng.normal(size=(4, 1)), requires_grad=True)
report = check_gradients(lambda: tn.logsumexp(tn.matmul(W, v)), [("W", W), ("v", v)])
for name, (analytic, numeric, err) in report.items():
    print(f"{name}: max relative error {err.max():.1e}")
