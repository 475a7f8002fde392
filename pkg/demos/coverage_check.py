"""
Does the certificate hold up?
=============================

Draw many synthetic datasets from a known distribution, certify each one,
and count how often the true risk exceeds the certified bound. The failure
rate should stay within beta plus three binomial standard deviations.
"""

from scenariocert.validation import SyntheticSpec, exact_risk, pac_monte_carlo

# twenty evenly weighted atoms, jittered so values never repeat
spec = SyntheticSpec(list(range(20)), [0.05] * 20, seed=70, jitter=0.45)
print(f"true risk at y = 17.2: {exact_risk(spec, 17.2):.4f}")

for mode, rho in (("robust", None), ("relaxed", 0.1)):
    report = pac_monte_carlo(spec, 200, 0.05, mode, rho, repetitions=2000)
    print(f"{mode:8s} failure rate {report.failure_rate:.4f} "
          f"(band {report.binomial_3sigma:.4f}, within: {report.within_band})")
