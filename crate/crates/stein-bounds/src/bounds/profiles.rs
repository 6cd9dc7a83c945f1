//! Tail profiles and the moment bounds they imply.
//!
//! A [`TailProfile`] is an assumed bound on `P[|X| > x]`; `moment_bound_from_tail`
//! turns it into a bound on `‖X‖_{2k}`. For Weibull-type tails the bound is
//! closed-form; for log-Weibull tails no clean closed form with explicit
//! constants exists, so the tail-moment integral
//! `2k ∫ t^{2k−1} min(1, c e^{−b log(1+t)^a}) dt` is evaluated directly by
//! adaptive quadrature in log-space.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::norms::MomentOrder;

/// An assumed tail bound `P[|X| > x] ≤ …` for a coupling variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TailProfile {
    /// `|X| ≤ x` almost surely.
    Bounded { x: f64 },
    /// `P[|X| > t] ≤ c·exp(−b t^a)`, all parameters positive.
    Weibull { a: f64, b: f64, c: f64 },
    /// `P[|X| > t] ≤ c·exp(−b log(1+t)^a)` with `a > 1`.
    LogWeibull { a: f64, b: f64, c: f64 },
}

impl TailProfile {
    pub fn bounded(x: f64) -> Result<Self> {
        let p = TailProfile::Bounded { x };
        p.validate()?;
        Ok(p)
    }

    pub fn weibull(a: f64, b: f64, c: f64) -> Result<Self> {
        let p = TailProfile::Weibull { a, b, c };
        p.validate()?;
        Ok(p)
    }

    pub fn log_weibull(a: f64, b: f64, c: f64) -> Result<Self> {
        let p = TailProfile::LogWeibull { a, b, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TailProfile::Bounded { x } => {
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::domain(format!(
                        "bounded profile needs x >= 0, got {x}"
                    )));
                }
            }
            TailProfile::Weibull { a, b, c } => {
                for (n, v) in [("a", a), ("b", b), ("c", c)] {
                    if !v.is_finite() || v <= 0.0 {
                        return Err(Error::domain(format!(
                            "weibull profile needs {n} > 0, got {v}"
                        )));
                    }
                }
            }
            TailProfile::LogWeibull { a, b, c } => {
                for (n, v) in [("b", b), ("c", c)] {
                    if !v.is_finite() || v <= 0.0 {
                        return Err(Error::domain(format!(
                            "log_weibull profile needs {n} > 0, got {v}"
                        )));
                    }
                }
                if !a.is_finite() || a <= 1.0 {
                    return Err(Error::domain(format!(
                        "log_weibull profile needs a > 1, got {a}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parses `bounded:x`, `weibull:a,b,c` or `log_weibull:a,b,c`.
impl std::str::FromStr for TailProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::config(format!("tail profile `{s}` missing `kind:params`")))?;
        let nums: Vec<f64> = rest
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config(format!("bad number `{p}` in tail profile `{s}`")))
            })
            .collect::<Result<_>>()?;
        match (kind.trim(), nums.as_slice()) {
            ("bounded", [x]) => TailProfile::bounded(*x),
            ("weibull", [a, b, c]) => TailProfile::weibull(*a, *b, *c),
            ("log_weibull", [a, b, c]) => TailProfile::log_weibull(*a, *b, *c),
            _ => Err(Error::config(format!(
                "tail profile `{s}` not recognised; expected bounded:x, weibull:a,b,c or log_weibull:a,b,c"
            ))),
        }
    }
}

/// Upper bound on `‖X‖_{2k}` implied by a tail profile.
pub fn moment_bound_from_tail(profile: &TailProfile, two_k: MomentOrder) -> Result<f64> {
    profile.validate()?;
    let two_k = two_k.require_even()?.value();
    let tk = f64::from(two_k);
    match *profile {
        TailProfile::Bounded { x } => Ok(x),
        TailProfile::Weibull { a, b, c } => {
            // ((2kc/a) · b^{−2k/a} · Γ(2k/a))^{1/(2k)}, in log-space
            let log_moment = (tk * c / a).ln() - (tk / a) * b.ln() + ln_gamma(tk / a);
            Ok((log_moment / tk).exp())
        }
        TailProfile::LogWeibull { a, b, c } => log_weibull_norm_bound(a, b, c, two_k),
    }
}

/// Upper bounds `(α_{n,k}, β_{n,k})` on `‖n⁻¹G‖₂ₖ` and `‖D‖₂ₖ` as functions
/// of `k`, built from one tail profile for each variable. Non-decreasing in
/// `k` by construction.
#[derive(Debug, Clone, Copy)]
pub struct NormProfile {
    g: TailProfile,
    d: TailProfile,
}

impl NormProfile {
    pub fn new(g: TailProfile, d: TailProfile) -> Result<Self> {
        g.validate()?;
        d.validate()?;
        Ok(NormProfile { g, d })
    }

    /// `(α_{n,k}, β_{n,k})` at moment order `2k`.
    pub fn at(&self, k: u32) -> Result<(f64, f64)> {
        let two_k = MomentOrder::new(2 * k.max(1))?;
        Ok((
            moment_bound_from_tail(&self.g, two_k)?,
            moment_bound_from_tail(&self.d, two_k)?,
        ))
    }
}

/// `‖X‖_{2k}` bound for the log-Weibull tail, by quadrature.
///
/// Substituting `u = log(1+t)` the tail-moment integral becomes
/// `∫_0^∞ exp{g(u)} du` with
/// `g(u) = (2k−1)·log(e^u − 1) + u + min(0, log c − b u^a)`,
/// which decays super-exponentially for `a > 1`. The integrand is shifted by
/// its maximum before integration so only well-scaled values are summed.
fn log_weibull_norm_bound(a: f64, b: f64, c: f64, two_k: u32) -> Result<f64> {
    let tk = f64::from(two_k);
    let g = |u: f64| -> f64 {
        if u <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let log_t = if u > 1e-8 {
            (u.exp() - 1.0).ln()
        } else {
            // log(e^u − 1) = log u + u/2 + O(u²) near zero
            u.ln() + u / 2.0
        };
        (tk - 1.0) * log_t + u + (c.ln() - b * u.powf(a)).min(0.0)
    };

    // locate the peak and an upper truncation point g(u) < g_max − 46
    let mut upper = 1.0f64;
    let mut g_max = f64::NEG_INFINITY;
    loop {
        let mut local_max = f64::NEG_INFINITY;
        for i in 1..=256 {
            let u = upper * f64::from(i) / 256.0;
            local_max = local_max.max(g(u));
        }
        g_max = g_max.max(local_max);
        if g(upper) < g_max - 46.0 {
            break;
        }
        upper *= 2.0;
        if upper > 1e9 {
            return Err(Error::numeric(
                "log_weibull tail integral failed to localise; parameters too extreme",
            ));
        }
    }
    let g_max = {
        // refine the shift on a denser grid
        let mut m = f64::NEG_INFINITY;
        for i in 1..=4096 {
            m = m.max(g(upper * f64::from(i) / 4096.0));
        }
        m
    };

    let h = |u: f64| {
        let v = g(u) - g_max;
        if v < -700.0 {
            0.0
        } else {
            v.exp()
        }
    };

    // split at the kink where c·e^{−b u^a} crosses 1 (only present for c > 1)
    let mut cuts = vec![0.0, upper];
    if c > 1.0 {
        let kink = (c.ln() / b).powf(1.0 / a);
        if kink > 0.0 && kink < upper {
            cuts.push(kink);
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let mut integral = 0.0;
    for pair in cuts.windows(2) {
        integral += adaptive_simpson(&h, pair[0], pair[1], 1e-8)?;
    }
    if integral <= 0.0 {
        return Err(Error::numeric("log_weibull tail integral vanished"));
    }
    // E|X|^{2k} ≤ 2k · e^{g_max} · integral;  take the 2k-th root in logs
    let log_moment = tk.ln() + g_max + integral.ln();
    Ok((log_moment / tk).exp())
}

/// Adaptive Simpson integration with the classic error estimate
/// `|S_fine − S_coarse|/15`, run to a relative tolerance.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    // coarse pass to scale the absolute tolerance
    let n0 = 64;
    let mut coarse = 0.0;
    let hstep = (b - a) / f64::from(n0);
    for i in 0..n0 {
        let x0 = a + hstep * f64::from(i);
        coarse += simpson(f, x0, x0 + hstep);
    }
    let abs_tol = (coarse.abs() * rel_tol).max(f64::MIN_POSITIVE);

    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::numeric(
                "adaptive quadrature failed to converge within depth limit",
            ));
        }
        Ok(recurse(f, a, m, left, tol / 2.0, depth - 1)?
            + recurse(f, m, b, right, tol / 2.0, depth - 1)?)
    }

    recurse(f, a, b, simpson(f, a, b), abs_tol, 48)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn even(two_k: u32) -> MomentOrder {
        MomentOrder::new(two_k).unwrap()
    }

    #[test]
    fn bounded_profile_is_constant_in_k() {
        let p = TailProfile::bounded(3.0).unwrap();
        assert_eq!(moment_bound_from_tail(&p, even(2)).unwrap(), 3.0);
        assert_eq!(moment_bound_from_tail(&p, even(100)).unwrap(), 3.0);
    }

    #[test]
    fn weibull_exponential_is_tight() {
        // Exponential(1): P[X > t] = e^{-t}, i.e. weibull(1,1,1); the lemma's
        // bound on E X^{2k} is exactly (2k)! there.
        let p = TailProfile::weibull(1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(
            moment_bound_from_tail(&p, even(2)).unwrap(),
            1.4142135623730951,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            moment_bound_from_tail(&p, even(4)).unwrap(),
            2.2133638394006432,
            max_relative = 1e-12
        );
        for k in 1u32..=8 {
            let bound = moment_bound_from_tail(&p, even(2 * k)).unwrap();
            let factorial: f64 = (1..=2 * k).map(f64::from).product();
            assert_relative_eq!(
                bound.powi(2 * k as i32),
                factorial,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn log_weibull_matches_reference_quadrature() {
        // references computed independently with 40-digit arithmetic
        let p = TailProfile::log_weibull(2.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(
            moment_bound_from_tail(&p, even(2)).unwrap(),
            2.3275990131138850,
            max_relative = 1e-7
        );
        assert_relative_eq!(
            moment_bound_from_tail(&p, even(4)).unwrap(),
            3.9117917506399104,
            max_relative = 1e-7
        );
        // c > 1 exercises the min(1, ·) kink
        let p = TailProfile::log_weibull(2.0, 1.0, 3.0).unwrap();
        assert_relative_eq!(
            moment_bound_from_tail(&p, even(4)).unwrap(),
            5.1408009455087409,
            max_relative = 1e-7
        );
    }

    #[test]
    fn norm_profile_monotone_in_k() {
        let profiles = [
            TailProfile::bounded(1.0).unwrap(),
            TailProfile::weibull(1.0, 1.0, 1.0).unwrap(),
            TailProfile::weibull(2.0, 0.5, 0.01).unwrap(),
            TailProfile::log_weibull(2.0, 1.0, 1.0).unwrap(),
        ];
        for g in &profiles {
            for d in &profiles {
                let np = NormProfile::new(*g, *d).unwrap();
                let mut prev = (0.0, 0.0);
                for k in 1u32..=10 {
                    let (alpha, beta) = np.at(k).unwrap();
                    assert!(alpha >= prev.0 && beta >= prev.1, "profile norms decreased at k={k}");
                    prev = (alpha, beta);
                }
            }
        }
    }

    #[test]
    fn profile_validation() {
        assert!(TailProfile::weibull(0.0, 1.0, 1.0).is_err());
        assert!(TailProfile::log_weibull(1.0, 1.0, 1.0).is_err());
        assert!(TailProfile::bounded(-1.0).is_err());
        assert!(moment_bound_from_tail(&TailProfile::bounded(1.0).unwrap(), even(3)).is_err());
    }

    #[test]
    fn profile_parsing() {
        assert_eq!(
            "bounded:2.5".parse::<TailProfile>().unwrap(),
            TailProfile::Bounded { x: 2.5 }
        );
        assert_eq!(
            "weibull:1,2,0.5".parse::<TailProfile>().unwrap(),
            TailProfile::Weibull { a: 1.0, b: 2.0, c: 0.5 }
        );
        assert!("weibull:1,2".parse::<TailProfile>().is_err());
        assert!("gaussian:1".parse::<TailProfile>().is_err());
    }
}
