use contextuality::lp::LinearSystem;
use contextuality::rational::{ratio, Rational};
use num_traits::Zero;
use proptest::prelude::*;

pub fn rational() -> impl Strategy<Value = Rational> {
    (-3i64..=3, 1i64..=3).prop_map(|(n, d)| ratio(n, d))
}

/// Systems with up to 12 variables. Half get a right-hand side built from a
/// nonnegative point, so feasible and infeasible cases both show up.
pub fn system() -> impl Strategy<Value = LinearSystem> {
    (1usize..=12, 1usize..=6)
        .prop_flat_map(|(n, m)| {
            (
                Just(n),
                prop::collection::vec(prop::collection::vec(rational(), n), m),
                prop::collection::vec(0i64..=3, n),
                prop::collection::vec(-4i64..=4, m),
                any::<bool>(),
            )
        })
        .prop_map(|(n, a, x0, free_rhs, planted)| {
            let rows = a
                .into_iter()
                .zip(free_rhs)
                .map(|(coeffs, r)| {
                    let rhs = if planted {
                        coeffs.iter().zip(&x0).fold(Rational::zero(), |acc, (c, &x)| acc + c * ratio(x, 1))
                    } else {
                        ratio(r, 1)
                    };
                    (coeffs, rhs)
                })
                .collect();
            LinearSystem::from_rows(n, rows).unwrap()
        })
}
