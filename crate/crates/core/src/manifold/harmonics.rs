//! Fully normalized associated Legendre functions for real spherical
//! harmonics on the unit sphere (no Condon–Shortley phase).

use std::f64::consts::PI;

/// Table of `P̄_l^m(cos θ)` for `0 <= m <= l <= lmax`, normalized so that
/// `∫_{S²} (P̄_l^m(cos θ))² dΩ = 1` when m = 0 (and `2 ∫ ... cos²(mφ)` = 1
/// when combined with the `√2 cos mφ` factor).
#[derive(Debug, Clone)]
pub struct LegendreTable {
    lmax: usize,
    values: Vec<f64>,
}

impl LegendreTable {
    pub fn new(lmax: usize, colatitude: f64) -> Self {
        let x = colatitude.cos();
        let s = colatitude.sin().abs();
        let mut values = vec![0.0; (lmax + 1) * (lmax + 2) / 2];
        let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;

        let mut pmm = (1.0 / (4.0 * PI)).sqrt();
        for m in 0..=lmax {
            if m > 0 {
                let mf = m as f64;
                pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
            }
            values[idx(m, m)] = pmm;
            if m == lmax {
                break;
            }
            let mf = m as f64;
            let mut p_lm2 = pmm;
            let mut p_lm1 = (2.0 * mf + 3.0).sqrt() * x * pmm;
            values[idx(m + 1, m)] = p_lm1;
            for l in (m + 2)..=lmax {
                let lf = l as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                    .sqrt();
                let p = a * (x * p_lm1 - b * p_lm2);
                values[idx(l, m)] = p;
                p_lm2 = p_lm1;
                p_lm1 = p;
            }
        }
        Self { lmax, values }
    }

    pub fn get(&self, l: usize, m: usize) -> f64 {
        debug_assert!(m <= l && l <= self.lmax);
        self.values[l * (l + 1) / 2 + m]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_closed_forms() {
        let th = 0.7_f64;
        let t = LegendreTable::new(3, th);
        let c = th.cos();
        let s = th.sin();
        assert!((t.get(0, 0) - (1.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
        assert!((t.get(1, 0) - (3.0 / (4.0 * PI)).sqrt() * c).abs() < 1e-15);
        // l=1, m=1 (real, without the √2 azimuthal factor)
        assert!((t.get(1, 1) - (3.0 / (8.0 * PI)).sqrt() * s).abs() < 1e-15);
        let p20 = (5.0 / (4.0 * PI)).sqrt() * 0.5 * (3.0 * c * c - 1.0);
        assert!((t.get(2, 0) - p20).abs() < 1e-15);
    }

    #[test]
    fn north_pole_only_zonal_survives() {
        let t = LegendreTable::new(6, 0.0);
        for l in 0..=6 {
            let expected = ((2.0 * l as f64 + 1.0) / (4.0 * PI)).sqrt();
            assert!((t.get(l, 0) - expected).abs() < 1e-14);
            for m in 1..=l {
                assert_eq!(t.get(l, m), 0.0);
            }
        }
    }
}
