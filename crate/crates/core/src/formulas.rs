//! Closed-form constants: the wetting critical point, Chalker's bounds,
//! small-cluster partition constants and the layering function F(β,u).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("beta must be positive and finite, got {beta}")))
    }
}

fn check_j(j: f64) -> Result<()> {
    if j > 0.0 && j < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("J must lie in (0,1), got {j}")))
    }
}

/// J = e^{-2β}.
pub fn coupling(beta: f64) -> f64 {
    (-2.0 * beta).exp()
}

/// Inverse temperature with the derived J and a pinning reward.
///
/// `h` and `u` are both stored so that the value supplied by the caller is
/// returned unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    beta: f64,
    j: f64,
    h: f64,
    u: f64,
}

impl ModelParams {
    /// Zero pinning reward.
    pub fn new(beta: f64) -> Result<Self> {
        Self::with_h(beta, 0.0)
    }

    pub fn with_h(beta: f64, h: f64) -> Result<Self> {
        check_beta(beta)?;
        if !h.is_finite() {
            return Err(Error::InvalidArgument(format!("h must be finite, got {h}")));
        }
        let hw = wetting_critical_point(beta)?;
        Ok(ModelParams { beta, j: coupling(beta), h, u: h - hw })
    }

    /// Pinning reward h = h_w(β) + u.
    pub fn with_u(beta: f64, u: f64) -> Result<Self> {
        check_beta(beta)?;
        if !u.is_finite() {
            return Err(Error::InvalidArgument(format!("u must be finite, got {u}")));
        }
        let hw = wetting_critical_point(beta)?;
        Ok(ModelParams { beta, j: coupling(beta), h: hw + u, u })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn u(&self) -> f64 {
        self.u
    }
}

/// h_w(β) = -log(1 - e^{-4β}).
pub fn wetting_critical_point(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let j = coupling(beta);
    Ok(-(-(j * j)).ln_1p())
}

/// Chalker's bounds `(lower, upper)` on h_w(β). The lower bound coincides
/// with h_w(β) and is evaluated by the same expression.
pub fn chalker_bounds(beta: f64) -> Result<(f64, f64)> {
    let lower = wetting_critical_point(beta)?;
    let e = beta.exp();
    let upper = (16.0 * (e + 1.0) / (e - 1.0)).ln();
    Ok((lower, upper))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct SmallClusterConstants {
    pub H1: f64,
    pub H2: f64,
    pub c1: f64,
    pub c2: f64,
}

/// log((1-J^4)/(1-J^3)), the excess free energy of an adjacent pair.
pub(crate) fn pair_excess(j: f64) -> f64 {
    let j3 = j * j * j;
    (-(j3 * j)).ln_1p() - (-j3).ln_1p()
}

pub fn small_cluster_constants(beta: f64) -> Result<SmallClusterConstants> {
    let h1 = wetting_critical_point(beta)?;
    let j = coupling(beta);
    let pe = pair_excess(j);
    Ok(SmallClusterConstants {
        H1: h1,
        H2: 2.0 * h1 + pe,
        c1: pe / 6.0,
        c2: 2.0 * j.ln_1p(),
    })
}

/// g1(k,u) = log(1 + J^{2k}(e^u - 1)).
pub fn g1(beta: f64, k: u32, u: f64) -> Result<f64> {
    check_beta(beta)?;
    let j2k = coupling(beta).powi(2 * k as i32);
    let arg = j2k * u.exp_m1();
    if arg <= -1.0 {
        return Err(Error::Domain(format!("1 + J^(2k)(e^u - 1) <= 0 at k={k}, u={u}")));
    }
    Ok(arg.ln_1p())
}

/// g2(k,0) = log(1 - ((J^3 - J^4)/(1 - J^4)) J^{3k}).
pub fn g2_zero(beta: f64, k: u32) -> Result<f64> {
    check_beta(beta)?;
    let j = coupling(beta);
    let j3 = j * j * j;
    let ratio = (j3 - j3 * j) / (1.0 - j3 * j);
    Ok((-ratio * j3.powi(k as i32)).ln_1p())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DenominatorConvention {
    /// 1 - J^3
    #[default]
    AsPrinted,
    /// 1 - J^4
    AsDerived,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayeringCoefficients {
    pub alpha1: f64,
    pub alpha2: f64,
    pub convention: DenominatorConvention,
}

impl LayeringCoefficients {
    pub fn new(alpha1: f64, alpha2: f64, convention: DenominatorConvention) -> Result<Self> {
        if !(alpha1 > 0.0 && alpha2 > 0.0 && alpha1.is_finite() && alpha2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha1, alpha2 must be positive, got {alpha1}, {alpha2}"
            )));
        }
        Ok(LayeringCoefficients { alpha1, alpha2, convention })
    }

    /// The penalty prefactor b = 2α₂(J³ - J⁴)/denominator.
    pub fn penalty(&self, j: f64) -> f64 {
        let j3 = j * j * j;
        let den = match self.convention {
            DenominatorConvention::AsPrinted => 1.0 - j3,
            DenominatorConvention::AsDerived => 1.0 - j3 * j,
        };
        2.0 * self.alpha2 * (j3 - j3 * j) / den
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayeringValue {
    pub value: f64,
    pub maximizers: Vec<u32>,
}

/// F(u) = max over n in [0, n_cap] of α₁J^{2n}u - bJ^{3n}.
pub fn layering_f(j: f64, u: f64, coeffs: &LayeringCoefficients, n_cap: u32) -> Result<LayeringValue> {
    check_j(j)?;
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::InvalidArgument(format!("layering function needs u > 0, got {u}")));
    }
    if n_cap == 0 {
        return Err(Error::InvalidArgument("n_cap must be positive".into()));
    }
    let b = coeffs.penalty(j);
    let pieces: Vec<(f64, f64)> = (0..=n_cap)
        .map(|n| {
            let gain = coeffs.alpha1 * j.powi(2 * n as i32) * u;
            let cost = b * j.powi(3 * n as i32);
            (gain - cost, gain + cost)
        })
        .collect();
    let (best, best_scale) = pieces
        .iter()
        .copied()
        .fold((f64::NEG_INFINITY, 0.0), |acc, p| if p.0 > acc.0 { p } else { acc });
    let maximizers: Vec<u32> = pieces
        .iter()
        .enumerate()
        .filter(|(_, p)| best - p.0 <= 16.0 * f64::EPSILON * (best_scale + p.1))
        .map(|(n, _)| n as u32)
        .collect();
    if maximizers.contains(&n_cap) {
        return Err(Error::CapTooSmall { n_cap });
    }
    Ok(LayeringValue { value: best, maximizers })
}

/// Initial scan cap 8 + ceil(|log u| / |log J|).
pub fn default_n_cap(j: f64, u: f64) -> u32 {
    let est = (u.ln().abs() / j.ln().abs()).ceil();
    8 + if est.is_finite() { est.min(1e6) as u32 } else { 0 }
}

/// [`layering_f`] with the cap doubled until the maximizer is interior.
pub fn layering_f_auto(j: f64, u: f64, coeffs: &LayeringCoefficients) -> Result<LayeringValue> {
    let mut cap = default_n_cap(j, u);
    loop {
        match layering_f(j, u, coeffs, cap) {
            Err(Error::CapTooSmall { .. }) if cap < 1 << 20 => cap *= 2,
            other => return other,
        }
    }
}

/// The u at which affine pieces n and n+1 of F are equal:
/// u_n = b J^n (1 - J^3) / (α₁ (1 - J^2)).
pub fn breakpoint(coeffs: &LayeringCoefficients, j: f64, n: u32) -> Result<f64> {
    check_j(j)?;
    let b = coeffs.penalty(j);
    let j2 = j * j;
    Ok(b * j.powi(n as i32) * (1.0 - j2 * j) / (coeffs.alpha1 * (1.0 - j2)))
}

/// Smallest maximizer of F at u.
pub fn maximizer_index(j: f64, u: f64, coeffs: &LayeringCoefficients) -> Result<u32> {
    Ok(layering_f_auto(j, u, coeffs)?.maximizers[0])
}
