"""
Trading violations for a smaller budget
=======================================

A thousand iteration counts are stored in the test fixture. Penalizing runs
that exceed the budget with weight rho = 1/q_hat lets about q_hat of them
through, and each choice comes with its own risk certificate.
"""

from pathlib import Path

from scenariocert import io
from scenariocert.scenario import certify_relaxed, certify_robust, rho_from_target, sweep_rho

here = Path(__file__).resolve().parent
samples = io.read_samples_csv(here.parent / "tests" / "data" / "iterations_fixture.csv")

sol, cert = certify_robust(samples, 1e-4)
print(f"robust budget {sol.y_star:.0f} iterations, risk <= {cert.epsilon:.4f}")

sol, cert = certify_relaxed(samples, rho_from_target(10), 1e-4)
print(f"rho = 1/10: budget {sol.y_star:.0f}, {sol.q_star} runs above, risk <= {cert.epsilon:.4f}")

# the whole curve at once, sorted by rho
for p in sweep_rho(samples, [500, 100, 50, 10, 5, 1], 1e-4):
    print(f"rho={p.control:<6g} budget={p.y_value:<6.0f} q*={p.q_star:<4d} eps={p.epsilon:.4f}")
