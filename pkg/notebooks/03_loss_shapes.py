# %% [markdown]
# # How the three supervised losses weigh a single entry
#
# Per-entry loss for a positive and a negative label across predicted
# probabilities, plus the pseudo-label term on unlabeled entries.

# %%
import numpy as np

from grassnet.losses import LossConfig, supervised_loss, unlabeled_loss
from grassnet.tensor import Tensor

modes = {name: LossConfig(name) for name in ("bce", "focal", "asymmetric")}
grid = [0.01, 0.03, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99]


def entry(p, y, cfg):
    return supervised_loss(Tensor([[p]]), [[y]], [[1]], cfg).item()


# %%
for y in (1, 0):
    print(f"\ntarget y = {y}")
    print("   p    " + "".join(f"{m:>12}" for m in modes))
    for p in grid:
        print(f"  {p:4.2f}  " + "".join(f"{entry(p, y, cfg):12.5f}" for cfg in modes.values()))

# %% [markdown]
# Focal weighting shrinks confident-correct entries by (1 - p)^2 or p^2.
# The asymmetric variant shifts negatives by the margin, so a negative
# scored below 0.05 costs nothing and passes no gradient.

# %%
p = Tensor([[0.03, 0.2]], requires_grad=True)
loss = supervised_loss(p, [[0, 0]], [[1, 1]], modes["asymmetric"])
loss.backward()
print("asymmetric negatives at p = 0.03, 0.2 -> gradient", p.grad)

# %%
scores = np.array([[0.99, 0.5, 0.97, 0.2]])
print("pseudo-label loss, threshold 0.95:", unlabeled_loss(Tensor(scores), 0.95).item())
print("mean of -log p over retained:", -np.log([0.99, 0.97]).mean())
