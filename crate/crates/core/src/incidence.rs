//! Partial-equilibrium tax incidence under linearized supply and demand, and
//! capitalization of a land value tax into the site price.

use serde::{Deserialize, Serialize};

use crate::error::{LvtError, Result};

/// Formula note attached to incidence output.
pub const DENOMINATOR_NOTE: &str =
    "pass-through uses S'/(S' - D') with D' < 0; the form S'/(D' + S') would give negative pass-through under that sign convention";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncidenceInputs {
    /// Demand slope at the pre-tax price (negative).
    pub d_prime: f64,
    /// Supply slope at the pre-tax price (positive).
    pub s_prime: f64,
    /// Pre-tax price.
    pub p0: f64,
    /// Per-unit tax.
    pub tau_unit: f64,
    /// Ad valorem rate.
    pub t_adval: f64,
}

impl Default for IncidenceInputs {
    fn default() -> Self {
        IncidenceInputs {
            d_prime: -1.0,
            s_prime: 1.0,
            p0: 100.0,
            tau_unit: 0.2,
            t_adval: 0.1,
        }
    }
}

impl IncidenceInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_prime.is_finite() && self.d_prime < 0.0) {
            return Err(LvtError::param("d_prime", "demand slope must be finite and < 0"));
        }
        if !(self.s_prime.is_finite() && self.s_prime > 0.0) {
            return Err(LvtError::param("s_prime", "supply slope must be finite and > 0"));
        }
        if !(self.p0.is_finite() && self.p0 > 0.0) {
            return Err(LvtError::param("p0", "must be > 0"));
        }
        if !(self.tau_unit.is_finite() && self.tau_unit >= 0.0) {
            return Err(LvtError::param("tau_unit", "must be >= 0"));
        }
        if !(self.t_adval >= 0.0 && self.t_adval < 1.0) {
            return Err(LvtError::param("t_adval", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Buyer and seller burdens of a tax of size `tax`. The larger burden is
    /// computed from its share and the smaller one as the difference, which
    /// is exact in floating point, so the two always sum to `tax`.
    fn split(&self, tax: f64) -> (f64, f64) {
        let den = self.s_prime - self.d_prime;
        let buyer_share = self.s_prime / den;
        let seller_share = -self.d_prime / den;
        if buyer_share >= seller_share {
            let buyer = buyer_share * tax;
            (buyer, tax - buyer)
        } else {
            let seller = seller_share * tax;
            (tax - seller, seller)
        }
    }

    fn incidence(&self, tax: f64) -> Incidence {
        let (buyer, seller) = self.split(tax);
        Incidence {
            buyer,
            seller_net: -seller,
            tax,
        }
    }
}

/// Price changes caused by a commodity tax of size `tax` per unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incidence {
    /// Change in the price buyers pay.
    pub buyer: f64,
    /// Change in the price sellers keep.
    pub seller_net: f64,
    /// Tax per unit the change refers to.
    pub tax: f64,
}

impl Incidence {
    /// `buyer / tax`; zero when there is no tax.
    pub fn pass_through(&self) -> f64 {
        if self.tax == 0.0 {
            0.0
        } else {
            self.buyer / self.tax
        }
    }

    pub fn buyer_burden(&self) -> f64 {
        self.buyer
    }

    pub fn seller_burden(&self) -> f64 {
        -self.seller_net
    }
}

/// `dP = S' tau / (S' - D')`, seller net change `dP - tau`.
pub fn unit_tax_incidence(inp: &IncidenceInputs) -> Result<Incidence> {
    inp.validate()?;
    Ok(inp.incidence(inp.tau_unit))
}

/// Ad valorem tax: the unit formula with `tau = t * P0`.
pub fn advalorem_incidence(inp: &IncidenceInputs) -> Result<Incidence> {
    inp.validate()?;
    Ok(inp.incidence(inp.t_adval * inp.p0))
}

/// Site value `R / (r + tau_v)` of a fixed factor earning rent `R`.
pub fn lvt_capitalization(rent: f64, r: f64, tau_v: f64) -> Result<f64> {
    if !(rent.is_finite() && rent >= 0.0) {
        return Err(LvtError::param("rent", "must be finite and >= 0"));
    }
    if !(r.is_finite() && tau_v.is_finite() && r + tau_v > 0.0) {
        return Err(LvtError::param("r", "r + tau_v must be > 0"));
    }
    Ok(rent / (r + tau_v))
}

/// One row of the incidence report.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceRow {
    pub case: &'static str,
    pub tax: f64,
    pub buyer_change: f64,
    pub seller_net_change: f64,
    pub pass_through: f64,
    pub deadweight_loss: f64,
}

/// Deadweight triangle `0.5 * tax * |D' dP|`.
fn deadweight(inp: &IncidenceInputs, inc: &Incidence) -> f64 {
    0.5 * inc.tax * (inp.d_prime * inc.buyer).abs()
}

/// Unit tax, ad valorem tax and a land value tax on a fixed factor. For the
/// land case the seller change is the drop in site value and no quantity
/// moves.
pub fn incidence_table(inp: &IncidenceInputs, rent: f64, r: f64, tau_v: f64) -> Result<Vec<IncidenceRow>> {
    let unit = unit_tax_incidence(inp)?;
    let adval = advalorem_incidence(inp)?;
    let v0 = lvt_capitalization(rent, r, 0.0)?;
    let v1 = lvt_capitalization(rent, r, tau_v)?;
    let row = |case, inc: &Incidence| IncidenceRow {
        case,
        tax: inc.tax,
        buyer_change: inc.buyer,
        seller_net_change: inc.seller_net,
        pass_through: inc.pass_through(),
        deadweight_loss: deadweight(inp, inc),
    };
    Ok(vec![
        row("unit", &unit),
        row("ad_valorem", &adval),
        IncidenceRow {
            case: "land_value",
            tax: tau_v,
            buyer_change: 0.0,
            seller_net_change: v1 - v0,
            pass_through: 0.0,
            deadweight_loss: 0.0,
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn inputs(d: f64, s: f64, tau: f64) -> IncidenceInputs {
        IncidenceInputs {
            d_prime: d,
            s_prime: s,
            tau_unit: tau,
            ..IncidenceInputs::default()
        }
    }

    #[test]
    fn even_split() {
        let inc = unit_tax_incidence(&inputs(-1.0, 1.0, 0.2)).unwrap();
        assert_relative_eq!(inc.buyer, 0.1, max_relative = 1e-15);
        assert_relative_eq!(inc.seller_net, -0.1, max_relative = 1e-15);
    }

    #[test]
    fn elastic_limits() {
        let inc = unit_tax_incidence(&inputs(-1e9, 1.0, 0.2)).unwrap();
        assert!(inc.buyer < 1e-9);
        let inc = unit_tax_incidence(&inputs(-1.0, 1e9, 0.2)).unwrap();
        assert!((inc.buyer - 0.2).abs() < 1e-9);
    }

    #[test]
    fn ad_valorem_examples() {
        let inp = IncidenceInputs {
            t_adval: 0.1,
            p0: 100.0,
            ..inputs(-1.0, 1.0, 0.0)
        };
        let inc = advalorem_incidence(&inp).unwrap();
        assert_relative_eq!(inc.buyer, 5.0, max_relative = 1e-15);
        assert_relative_eq!(inc.seller_net, -5.0, max_relative = 1e-15);
        let zero = advalorem_incidence(&IncidenceInputs { t_adval: 0.0, ..inp }).unwrap();
        assert_eq!(zero.buyer, 0.0);
    }

    #[test]
    fn ad_valorem_matches_unit_tax() {
        let inp = IncidenceInputs {
            d_prime: -0.7,
            s_prime: 2.3,
            p0: 37.0,
            tau_unit: 0.15 * 37.0,
            t_adval: 0.15,
        };
        let a = advalorem_incidence(&inp).unwrap();
        let u = unit_tax_incidence(&inp).unwrap();
        assert_eq!(a.buyer, u.buyer);
        assert_eq!(a.seller_net, u.seller_net);
    }

    #[test]
    fn capitalization_examples() {
        assert_relative_eq!(lvt_capitalization(100.0, 0.05, 0.05).unwrap(), 1000.0, max_relative = 1e-14);
        assert_relative_eq!(lvt_capitalization(100.0, 0.05, 0.0).unwrap(), 2000.0, max_relative = 1e-14);
        assert!(lvt_capitalization(100.0, 0.0, 0.0).is_err());
        assert!(lvt_capitalization(-1.0, 0.05, 0.0).is_err());
    }

    #[test]
    fn capitalization_is_decreasing_and_convex() {
        let h = 1e-3;
        let v = |t: f64| lvt_capitalization(100.0, 0.05, t).unwrap();
        for n in 1..100 {
            let t = n as f64 * 0.01;
            assert!(v(t + h) < v(t));
            assert!(v(t + h) - 2.0 * v(t) + v(t - h) > 0.0);
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(unit_tax_incidence(&inputs(1.0, 1.0, 0.2)).is_err());
        assert!(unit_tax_incidence(&inputs(-1.0, 0.0, 0.2)).is_err());
        assert!(unit_tax_incidence(&inputs(-1.0, 1.0, -0.2)).is_err());
        let bad = IncidenceInputs { t_adval: 1.0, ..Default::default() };
        assert!(advalorem_incidence(&bad).is_err());
    }

    #[test]
    fn table_rows() {
        let t = incidence_table(&IncidenceInputs::default(), 100.0, 0.05, 0.05).unwrap();
        assert_eq!(t.len(), 3);
        assert_relative_eq!(t[0].deadweight_loss, 0.5 * 0.2 * 0.1, max_relative = 1e-14);
        assert_eq!(t[2].deadweight_loss, 0.0);
        assert_relative_eq!(t[2].seller_net_change, -1000.0, max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn burden_is_conserved(d in -100.0..-0.01f64, s in 0.01..100.0f64, tau in 0.0..10.0f64,
                               t in 0.0..0.99f64, p0 in 0.1..1000.0f64) {
            let inp = IncidenceInputs { d_prime: d, s_prime: s, p0, tau_unit: tau, t_adval: t };
            for inc in [unit_tax_incidence(&inp).unwrap(), advalorem_incidence(&inp).unwrap()] {
                prop_assert_eq!(inc.buyer_burden() + inc.seller_burden(), inc.tax);
                if inc.tax > 0.0 {
                    prop_assert!(inc.pass_through() > 0.0 && inc.pass_through() < 1.0);
                }
            }
        }

        #[test]
        fn pass_through_monotone(d in -100.0..-0.01f64, s in 0.01..100.0f64, f in 1.01..10.0f64) {
            let pt = |d: f64, s: f64| unit_tax_incidence(&inputs(d, s, 1.0)).unwrap().pass_through();
            prop_assert!(pt(d, s * f) > pt(d, s));
            prop_assert!(pt(d / f, s) > pt(d, s));
        }
    }
}
