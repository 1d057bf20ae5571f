//! Faà di Bruno expansion of `(ln o f)^(l)` as an explicit partition sum.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::jet::{Jet, FACTORIALS, K_MAX};

/// One multiplicity vector `(m_1, ..., m_l)` with `sum i m_i = l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionTerm {
    pub m: Vec<u32>,
    /// `l! / (m_1! ... m_l!)`
    pub multinomial: u64,
    /// `(-1)^(M-1) (M-1)!` with `M = sum m_i`
    pub sign_factor: i64,
}

impl PartitionTerm {
    fn new(m: Vec<u32>) -> Self {
        let l = m.len();
        let denom: u64 = m.iter().map(|&mi| FACTORIALS[mi as usize]).product();
        let total = m.iter().sum::<u32>() as usize;
        let magnitude = FACTORIALS[total - 1] as i64;
        PartitionTerm {
            multinomial: FACTORIALS[l] / denom,
            sign_factor: if total % 2 == 1 {
                magnitude
            } else {
                -magnitude
            },
            m,
        }
    }

    pub fn order(&self) -> usize {
        self.m.len()
    }

    /// `M = m_1 + ... + m_l`, the power of `f` in the denominator.
    pub fn parts(&self) -> u32 {
        self.m.iter().sum()
    }

    /// Coefficient of `prod_j f^(j)^(m_j) / f^M` in the expansion.
    pub fn coefficient(&self) -> f64 {
        let jfact: u64 = self
            .m
            .iter()
            .enumerate()
            .map(|(i, &mi)| FACTORIALS[i + 1].pow(mi))
            .product();
        self.multinomial as f64 * self.sign_factor as f64 / jfact as f64
    }
}

fn check_l(l: usize) -> Result<()> {
    if l == 0 || l > K_MAX {
        Err(Error::InvalidArgument(format!(
            "partition order {l} outside 1..={K_MAX}"
        )))
    } else {
        Ok(())
    }
}

/// All multiplicity vectors for `l`, in descending lexicographic order.
pub fn partitions(l: usize) -> Result<Vec<PartitionTerm>> {
    check_l(l)?;
    let mut out = Vec::new();
    let mut m = vec![0u32; l];
    descend(l, l, &mut m, &mut out);
    out.sort_by(|a, b| b.cmp(a));
    Ok(out.into_iter().map(PartitionTerm::new).collect())
}

// Splits `rest` into parts no larger than `largest`, biggest parts first.
fn descend(rest: usize, largest: usize, m: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if rest == 0 {
        out.push(m.clone());
        return;
    }
    for part in (1..=largest.min(rest)).rev() {
        m[part - 1] += 1;
        descend(rest - part, part, m, out);
        m[part - 1] -= 1;
    }
}

/// `(ln o f)^(l)` at the point of `fjet`, summed over partitions.
pub fn faa_ln_derivative(fjet: &Jet, l: usize) -> Result<f64> {
    check_l(l)?;
    if l > fjet.order() {
        return Err(Error::InsufficientOrder {
            needed: l,
            got: fjet.order(),
        });
    }
    let f = fjet.value();
    if !(f > 0.0) {
        return Err(Error::Domain(format!(
            "logarithmic derivative needs a positive value, got {f}"
        )));
    }
    let d = fjet.derivs();
    let mut total = 0.0;
    for term in partitions(l)? {
        let mut prod = 1.0;
        for (i, &mi) in term.m.iter().enumerate() {
            if mi > 0 {
                prod *= (d[i + 1] / FACTORIALS[i + 1] as f64).powi(mi as i32);
            }
        }
        total +=
            term.multinomial as f64 * term.sign_factor as f64 * prod / f.powi(term.parts() as i32);
    }
    Ok(total)
}

/// Human-readable term table for order `l`.
pub fn expansion_table(l: usize) -> Result<String> {
    let terms = partitions(l)?;
    let mut s = String::new();
    let _ = writeln!(s, "d^{l}/dx^{l} ln f  =  sum of {} terms", terms.len());
    let _ = writeln!(
        s,
        "{:<24} {:>12} {:>12} {:>14}  monomial",
        "m", "multinomial", "sign*(M-1)!", "coefficient"
    );
    for t in &terms {
        let mut mono = String::new();
        for (i, &mi) in t.m.iter().enumerate() {
            if mi > 0 {
                let _ = write!(mono, "f^({})", i + 1);
                if mi > 1 {
                    let _ = write!(mono, "^{mi}");
                }
                mono.push(' ');
            }
        }
        let _ = writeln!(
            s,
            "{:<24} {:>12} {:>12} {:>14.6}  {}/ f^{}",
            format!("{:?}", t.m),
            t.multinomial,
            t.sign_factor,
            t.coefficient(),
            mono,
            t.parts()
        );
    }
    Ok(s)
}
