"""
Risk bounds for a sampled iteration budget
==========================================

How much confidence does a budget chosen from N recorded runs carry? The
a-priori bound covers the robust choice (the largest observed count), the
a-posteriori bound covers budgets that leave q runs above, and the two-sided
bound brackets the risk when values never repeat.
"""

from scenariocert import bounds

n, beta = 1000, 1e-4

# robust budget: one scalar decision, so dimension 1
robust = bounds.binomial_epsilon(n, beta, 1)
print(f"robust budget: risk <= {robust.epsilon:.6f} with confidence 1 - {beta:g}")

# leaving q samples above the budget costs q + 1 in complexity
print(" q   a-posteriori   two-sided [lower, upper]")
for q in (0, 1, 5, 10, 50, 100):
    post = bounds.epsilon_posteriori(n, beta, q + 1)
    both = bounds.epsilon_interval(n, beta, q + 1)
    print(f"{q:3d}   {post.epsilon:.6f}       [{both.epsilon_lower:.6f}, {both.epsilon_upper:.6f}]")

# a budget picked without looking at the samples can use the held-out tail
print(f"fixed budget, 0 violations: {bounds.testset_epsilon(n, beta, 0).epsilon:.6f}")
print(f"fixed budget, 10 violations: {bounds.testset_epsilon(n, beta, 10).epsilon:.6f}")
