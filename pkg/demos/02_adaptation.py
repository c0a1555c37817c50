# Domain adaptation of a trained GP: the source posterior becomes the prior
# for a handful of target points. Shows the equivalence with conditioning on
# the union of both datasets and the variance contraction as target data
# accumulates. Run with: python3 demos/02_adaptation.py

import numpy as np

from gpde import Dataset, Hyperparams, adapted_posterior, posterior, train_expert

rng = np.random.default_rng(1)
h = Hyperparams(length_scale=1.0, signal_std=1.0, noise_std=0.15)

# Source data lives on the left half of the axis, target on the right:
# a covariate shift with a shared underlying function.
f = lambda X: np.sin(1.5 * X).sum(axis=1, keepdims=True)
X_s = rng.uniform(-3.0, 0.5, size=(60, 1))
X_t = rng.uniform(0.5, 3.0, size=(8, 1))
source = Dataset(X_s, f(X_s) + 0.15 * rng.normal(size=(60, 1)), "source")
target = Dataset(X_t, f(X_t) + 0.15 * rng.normal(size=(8, 1)), "target")

expert = train_expert(source, h)
X_star = np.linspace(-3.0, 3.0, 7).reshape(-1, 1)

before = posterior(expert, X_star)
after = adapted_posterior(expert, target, X_star)

print("  x     truth   source-only        adapted")
for x, t, m0, v0, m1, v1 in zip(X_star.ravel(), f(X_star).ravel(),
                                before.mean.ravel(), before.variance,
                                after.mean.ravel(), after.variance):
    print(f"{x:5.1f}  {t:6.2f}  {m0:6.2f} +- {np.sqrt(v0):4.2f}"
          f"   {m1:6.2f} +- {np.sqrt(v1):4.2f}")

# The adapted posterior is exactly what a single GP trained on source+target
# (at the source noise level) would predict:
union = Dataset(np.vstack([X_s, X_t]), np.vstack([source.Y, target.Y]), "both")
joint = posterior(train_expert(union, h), X_star)
gap = max(np.max(np.abs(after.mean - joint.mean)),
          np.max(np.abs(after.variance - joint.variance)))
print(f"\nmax |adapted - joint retrain| = {gap:.2e}")

# Each additional target point can only shrink the predictive variance.
print("\nmean variance on the target side as target points accumulate:")
grid = rng.uniform(0.5, 3.0, size=(50, 1))
for k in [0, 2, 4, 8]:
    sub = Dataset(X_t[:k], target.Y[:k], "target") if k else None
    v = adapted_posterior(expert, sub, grid).variance.mean()
    print(f"  {k} target points: {v:.4f}")
