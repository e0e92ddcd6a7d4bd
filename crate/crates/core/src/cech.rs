//! Cohomology of torus-invariant divisors by local cohomology of the fan.
//!
//! For `D = sum a_i D_i` and a character `m`, let `N(m)` be the set of rays
//! with `<m, v_i> < -a_i`. The `m`-graded piece of `H^p(O(D))` is the reduced
//! cohomology of the corresponding subset of the ray circle: `H^0` when `N`
//! is empty, `H^2` when `N` is everything, and `H^1` of rank
//! `#components - 1` otherwise. This is independent of the polygon count and
//! of Riemann-Roch, and is used to cross-check both.

use crate::toric::{Cohomology, DivisorClass, SmoothToricSurface, ToricError};

fn components_on_cycle(neg: &[bool]) -> usize {
    let n = neg.len();
    (0..n).filter(|&i| neg[i] && !neg[(i + n - 1) % n]).count()
}

/// Half-width of a character box containing every nonzero graded piece.
pub fn search_radius(surface: &SmoothToricSurface, d: &DivisorClass) -> i64 {
    let a = d.0.iter().map(|x| x.abs()).max().unwrap_or(0);
    let v = surface
        .rays()
        .iter()
        .flat_map(|r| r.iter().map(|x| x.abs()))
        .max()
        .unwrap_or(1);
    2 * a * v + 2
}

pub fn cohomology(
    surface: &SmoothToricSurface,
    d: &DivisorClass,
) -> Result<Cohomology, ToricError> {
    surface.check_divisor(d)?;
    let rays = surface.rays();
    let r = search_radius(surface, d);
    let mut out = Cohomology {
        h0: 0,
        h1: 0,
        h2: 0,
    };
    let mut neg = vec![false; rays.len()];
    for x in -r..=r {
        for y in -r..=r {
            for (i, v) in rays.iter().enumerate() {
                neg[i] = x * v[0] + y * v[1] < -d.0[i];
            }
            let count = neg.iter().filter(|&&b| b).count();
            if count == 0 {
                out.h0 += 1;
            } else if count == rays.len() {
                out.h2 += 1;
            } else {
                out.h1 += components_on_cycle(&neg) as u64 - 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toric::validate_fan;

    #[test]
    fn agrees_on_small_cases() {
        let s = validate_fan("S2", &[[1, 0], [0, 1], [-1, 2], [0, -1]]).unwrap();
        let c0 = s.ray_divisor(1);
        assert_eq!(
            cohomology(&s, &c0).unwrap(),
            Cohomology {
                h0: 1,
                h1: 1,
                h2: 0
            }
        );
        let p2 = validate_fan("P2", &[[1, 0], [0, 1], [-1, -1]]).unwrap();
        let m3 = p2.ray_divisor(0).scale(-3);
        assert_eq!(
            cohomology(&p2, &m3).unwrap(),
            Cohomology {
                h0: 0,
                h1: 0,
                h2: 1
            }
        );
        assert_eq!(components_on_cycle(&[true, false, true, false]), 2);
        assert_eq!(components_on_cycle(&[true, false, false, true]), 1);
    }
}
