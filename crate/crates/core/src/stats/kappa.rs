use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Landis & Koch agreement bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Agreement {
    Poor,
    Slight,
    Fair,
    Moderate,
    Substantial,
    AlmostPerfect,
}

impl Agreement {
    pub fn of(kappa: f64) -> Self {
        if kappa <= 0.0 {
            Agreement::Poor
        } else if kappa <= 0.20 {
            Agreement::Slight
        } else if kappa <= 0.40 {
            Agreement::Fair
        } else if kappa <= 0.60 {
            Agreement::Moderate
        } else if kappa <= 0.80 {
            Agreement::Substantial
        } else {
            Agreement::AlmostPerfect
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Agreement::Poor => "poor",
            Agreement::Slight => "slight",
            Agreement::Fair => "fair",
            Agreement::Moderate => "moderate",
            Agreement::Substantial => "substantial",
            Agreement::AlmostPerfect => "almost perfect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kappa {
    pub kappa: f64,
    pub agreement: Agreement,
}

pub fn cohens_kappa<T: Ord>(a: &[T], b: &[T], categories: &[T]) -> Result<Kappa> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "rating sequences differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::invalid("no ratings"));
    }

    let mut marginals: BTreeMap<&T, (usize, usize)> =
        categories.iter().map(|c| (c, (0, 0))).collect();
    let mut agree = 0usize;
    for (ra, rb) in a.iter().zip(b) {
        let Some(ma) = marginals.get_mut(ra) else {
            return Err(Error::invalid("rating outside the category set"));
        };
        ma.0 += 1;
        let Some(mb) = marginals.get_mut(rb) else {
            return Err(Error::invalid("rating outside the category set"));
        };
        mb.1 += 1;
        if ra == rb {
            agree += 1;
        }
    }

    let n = a.len() as f64;
    let observed = agree as f64 / n;
    let chance: f64 = marginals
        .values()
        .map(|&(ca, cb)| (ca as f64 / n) * (cb as f64 / n))
        .sum();

    let kappa = if (1.0 - chance).abs() < f64::EPSILON {
        1.0
    } else {
        (observed - chance) / (1.0 - chance)
    };
    Ok(Kappa {
        kappa,
        agreement: Agreement::of(kappa),
    })
}
