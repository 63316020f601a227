//! Named polarization states and the state-pair catalogs used for witness
//! tables.
//!
//! Labels: single-qubit `H V + - R L`, two-qubit products such as `HH`,
//! `H+`, `RR`, Bell states `phi+ phi- psi+ psi-`, and
//! `S1 = (|H+> + |V->)/sqrt2`, `S2 = (|H+> - |V->)/sqrt2`,
//! `S3 = (|H-> + |V+>)/sqrt2`, `S4 = (|H-> - |V+>)/sqrt2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{kets, DensityMatrix, C64};

pub fn ket(label: &str) -> Result<Vec<C64>> {
    let unknown = || Error::InvalidArgument(format!("unknown state label '{label}'"));
    let pair = |a: &str, b: &str, sign: f64| -> Result<Vec<C64>> {
        Ok(kets::superpose(&ket(a)?, &ket(b)?, sign))
    };
    match label {
        "phi+" => pair("HH", "VV", 1.0),
        "phi-" => pair("HH", "VV", -1.0),
        "psi+" => pair("HV", "VH", 1.0),
        "psi-" => pair("HV", "VH", -1.0),
        "S1" => pair("H+", "V-", 1.0),
        "S2" => pair("H+", "V-", -1.0),
        "S3" => pair("H-", "V+", 1.0),
        "S4" => pair("H-", "V+", -1.0),
        _ => {
            let mut chars = label.chars();
            let first = chars.next().ok_or_else(unknown)?;
            let mut out = kets::by_label(first).ok_or_else(unknown)?;
            for c in chars {
                out = kets::tensor(&out, &kets::by_label(c).ok_or_else(unknown)?);
            }
            if out.len() > 4 {
                return Err(unknown());
            }
            Ok(out)
        }
    }
}

pub fn state(label: &str) -> Result<DensityMatrix> {
    DensityMatrix::from_ket(&ket(label)?)
}

/// Ket notation for a label.
pub fn display_label(label: &str) -> String {
    format!("|{label}>")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CatalogRow {
    pub a: &'static str,
    pub b: &'static str,
    /// Rows of one class are expected to share a witness value.
    pub class: &'static str,
}

const fn row(a: &'static str, b: &'static str, class: &'static str) -> CatalogRow {
    CatalogRow { a, b, class }
}

/// Fifteen single-qubit pairs.
pub fn single_qubit_pairs() -> Vec<CatalogRow> {
    vec![
        row("H", "V", "basis"),
        row("H", "+", "mixed-basis"),
        row("H", "-", "mixed-basis"),
        row("H", "R", "mixed-basis"),
        row("H", "L", "mixed-basis"),
        row("V", "+", "mixed-basis"),
        row("V", "-", "mixed-basis"),
        row("V", "R", "mixed-basis"),
        row("V", "L", "mixed-basis"),
        row("+", "-", "coherent-antipodal"),
        row("+", "R", "coherent-mixed"),
        row("+", "L", "coherent-mixed"),
        row("-", "R", "coherent-mixed"),
        row("-", "L", "coherent-mixed"),
        row("R", "L", "coherent-antipodal"),
    ]
}

/// Twenty-four two-qubit pairs.
pub fn two_qubit_pairs() -> Vec<CatalogRow> {
    vec![
        row("phi+", "phi-", "bell"),
        row("phi+", "psi+", "bell"),
        row("phi+", "psi-", "bell"),
        row("phi-", "psi+", "bell"),
        row("phi-", "psi-", "bell"),
        row("psi+", "psi-", "bell-psi"),
        row("S1", "S2", "s-same"),
        row("S1", "S3", "s-cross"),
        row("S1", "S4", "s-cross"),
        row("S2", "S3", "s-cross"),
        row("S2", "S4", "s-cross"),
        row("S3", "S4", "s-same"),
        row("HH", "VV", "product-floor"),
        row("HH", "HV", "product-floor"),
        row("HH", "H+", "product-floor"),
        row("HH", "HR", "product-floor"),
        row("HH", "++", "product-partial"),
        row("HH", "RR", "product-partial"),
        row("++", "--", "product-coherent"),
        row("++", "H+", "product-coherent"),
        row("++", "HR", "product-partial"),
        row("++", "RR", "product-coherent"),
        row("--", "H-", "product-coherent"),
        row("RR", "LL", "product-coherent"),
    ]
}

pub fn pairs_for_dim(dim: usize) -> Result<Vec<CatalogRow>> {
    match dim {
        2 => Ok(single_qubit_pairs()),
        4 => Ok(two_qubit_pairs()),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::trace_distance;

    #[test]
    fn labels_resolve_to_normalized_kets() {
        for r in single_qubit_pairs().iter().chain(two_qubit_pairs().iter()) {
            for l in [r.a, r.b] {
                let k = ket(l).unwrap();
                let n: f64 = k.iter().map(|z| z.norm_sqr()).sum();
                assert!((n - 1.0).abs() < 1e-14, "{l}");
            }
        }
        assert_eq!(single_qubit_pairs().len(), 15);
        assert_eq!(two_qubit_pairs().len(), 24);
    }

    #[test]
    fn bell_states_orthogonal() {
        let d = trace_distance(&state("phi+").unwrap(), &state("psi-").unwrap()).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        assert!(ket("HX").is_err());
        assert!(ket("HHH").is_err());
    }
}
