"""Completeness dichotomy: decay to zero versus a positive plateau.

Solves the same radial problem (n=3, p=2, q=5, alpha=1) on two geometries:
hyperbolic space, where the volume-surface ratio test says solutions must
decay to zero, and the ExpPower{c=1, m=3} model, where the test fails and
solutions level off at a positive value lambda.
"""

import plaplace as pl


def run(descriptor, rmax=None):
    model = pl.make_model(descriptor)
    if rmax is None:
        rmax = min(60.0, pl.safe_horizon(model, 3))
    prob = pl.Problem(3, 2.0, 5.0, 1.0)
    sol = pl.integrate(prob, model, pl.SolverConfig(rmax))
    prof = pl.geometry_profile(model, 3, 2.0, sol.r_last)
    verdict = pl.classify_completeness(prof)
    print(f"--- {descriptor} ---")
    print(f"verdict: {verdict.verdict}  (regime {verdict.regime.name})")
    print(f"u at horizon r={sol.r_last:.3g}: {sol.eval_u(sol.r_last):.6g}")
    if verdict.verdict == "pSI":
        si = pl.asymptotic_ratio_si(sol, prof)
        print(f"plateau lambda-hat = {si['lambda_hat']:.6g}")
        print(f"universal bound    = {si['universal_bound']:.6g} "
              f"(slack {si['bound_slack']:.3g})")
        print(f"refined ratio dev  = {si['rel_deviation']:.2%}")
    print()


def main():
    run("hyperbolic")
    run("exppower:c=1,m=3")


if __name__ == "__main__":
    main()
