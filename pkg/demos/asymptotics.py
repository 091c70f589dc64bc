"""Sharp decay law: J(r)^{(p-1)/(q+1-p)} u(r) tends to a universal constant.

On geometries where the decay law is proven (hyperbolic, sub-exponential
ExpGamma), the rescaled solution Q(r) converges to
((p-1)/(q+1-p))^{(p-1)/(q+1-p)}; for p=2, q=5 this is 2^{-1/2}. The limit
is estimated by Richardson extrapolation of dyadic samples.
"""

import plaplace as pl


def main():
    n, p, q = 3, 2.0, 5.0
    target = pl.q_limit_constant(p, q)
    print(f"target constant: {target:.10f}")
    for descriptor in ("hyperbolic", "expgamma:c=1,gamma=0.5"):
        model = pl.make_model(descriptor)
        prob = pl.Problem(n, p, q, 1.0)
        sol = pl.integrate(prob, model, pl.SolverConfig(60.0))
        prof = pl.geometry_profile(model, n, p, sol.r_last)
        out = pl.asymptotic_ratio_sc(sol, prof)
        print(f"--- {descriptor} ---")
        for r, Q in zip(out["radii"], out["Q"]):
            print(f"  Q({r:5.1f}) = {Q:.6f}")
        print(f"  extrapolated limit = {out['limit']:.6f} "
              f"+/- {out['error_bar']:.2g}")
        print(f"  relative deviation = {out['rel_deviation']:.2%}")
        lm = pl.lemma_limit_checks(sol, prof)
        print(f"  auxiliary limits: a -> {lm['ratio_a_limit']:.2g} "
              f"(target 0), b -> {lm['ratio_b_limit']:.6f} "
              f"(target {lm['ratio_b_target']:.6f})")
        print()


if __name__ == "__main__":
    main()
