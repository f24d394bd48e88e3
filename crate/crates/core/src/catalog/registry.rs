//! String keys for catalog entries.
//!
//! ```text
//! linear:n=50            u = (1,…,1)/√n
//! linear:u=0.6,0.8
//! lp:n=256:p=4           (p=inf gives the sup norm)
//! linf:n=1024
//! ellip:n=64:gap=2       diag(gap, 1, …, 1)
//! ellip:diag=2,1
//! ellip:file=A.txt
//! tilted:<base key>:t=4
//! galpha:a=3
//! monomial:k=1
//! relu
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use super::function::*;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

fn unknown(key: &str) -> Error {
    Error::UnknownKey(key.to_string())
}

fn parse_params<'a>(key: &str, parts: &[&'a str]) -> Result<BTreeMap<&'a str, &'a str>> {
    let mut map = BTreeMap::new();
    for part in parts {
        let (k, v) = part.split_once('=').ok_or_else(|| unknown(key))?;
        if map.insert(k, v).is_some() {
            return Err(unknown(key));
        }
    }
    Ok(map)
}

fn take<'a>(key: &str, map: &mut BTreeMap<&str, &'a str>, name: &str) -> Result<&'a str> {
    map.remove(name).ok_or_else(|| unknown(key))
}

fn num<T: std::str::FromStr>(key: &str, s: &str) -> Result<T> {
    s.parse::<T>().map_err(|_| unknown(key))
}

fn list(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|x| num::<f64>(key, x)).collect()
}

fn done(key: &str, map: &BTreeMap<&str, &str>) -> Result<()> {
    if map.is_empty() {
        Ok(())
    } else {
        Err(unknown(key))
    }
}

/// Builds the function named by `key`.
pub fn parse_key(key: &str) -> Result<FunctionSpec> {
    let key = key.trim();
    if let Some(rest) = key.strip_prefix("tilted:") {
        let (base_key, t) = rest.rsplit_once(':').ok_or_else(|| unknown(key))?;
        let t = t.strip_prefix("t=").ok_or_else(|| unknown(key))?;
        let base = parse_key(base_key)?;
        return make_tilted(base, num(key, t)?);
    }
    let parts: Vec<&str> = key.split(':').collect();
    let (head, params) = parts.split_first().ok_or_else(|| unknown(key))?;
    let mut p = parse_params(key, params)?;
    let spec = match *head {
        "linear" => {
            if let Some(u) = p.remove("u") {
                make_linear(list(key, u)?)?
            } else {
                let n: usize = num(key, take(key, &mut p, "n")?)?;
                if n == 0 {
                    return Err(Error::invalid("dimension must be positive"));
                }
                make_linear(vec![1.0 / (n as f64).sqrt(); n])?.with_key(format!("linear:n={n}"))
            }
        }
        "lp" => {
            let n = num(key, take(key, &mut p, "n")?)?;
            let pv = take(key, &mut p, "p")?;
            let pv = if pv == "inf" { f64::INFINITY } else { num(key, pv)? };
            make_lp_norm(n, pv)?
        }
        "linf" => make_lp_norm(num(key, take(key, &mut p, "n")?)?, f64::INFINITY)?,
        "ellip" => {
            if let Some(d) = p.remove("diag") {
                make_ellipsoidal(Matrix::diag(&list(key, d)?))?
            } else if let Some(f) = p.remove("file") {
                make_ellipsoidal(Matrix::load_text(Path::new(f))?)?.with_key(format!("ellip:file={f}"))
            } else {
                let n: usize = num(key, take(key, &mut p, "n")?)?;
                let gap: f64 = num(key, take(key, &mut p, "gap")?)?;
                if n == 0 {
                    return Err(Error::invalid("dimension must be positive"));
                }
                let mut d = vec![1.0; n];
                d[0] = gap;
                make_ellipsoidal(Matrix::diag(&d))?.with_key(format!("ellip:n={n}:gap={gap}"))
            }
        }
        "galpha" => make_galpha(num(key, take(key, &mut p, "a")?)?)?,
        "monomial" => make_odd_monomial(num(key, take(key, &mut p, "k")?)?)?,
        "relu" => make_positive_part(),
        _ => return Err(unknown(key)),
    };
    done(key, &p)?;
    Ok(spec)
}

/// Keys of the built-in catalog.
pub const DEFAULT_KEYS: &[&str] = &[
    "linear:n=2",
    "linear:n=50",
    "lp:n=1:p=1",
    "lp:n=16:p=1",
    "lp:n=100:p=2",
    "lp:n=64:p=4",
    "lp:n=256:p=4",
    "lp:n=1024:p=4",
    "linf:n=16",
    "linf:n=64",
    "linf:n=256",
    "linf:n=1024",
    "linf:n=4096",
    "ellip:diag=2,1",
    "ellip:n=64:gap=2",
    "tilted:linf:n=128:t=4",
    "tilted:linf:n=256:t=4",
    "tilted:lp:n=100:p=2:t=4",
    "galpha:a=2",
    "galpha:a=3",
    "galpha:a=4",
    "monomial:k=1",
    "monomial:k=2",
    "relu",
];

pub fn default_catalog() -> Vec<FunctionSpec> {
    DEFAULT_KEYS
        .iter()
        .map(|k| parse_key(k).expect("built-in keys parse"))
        .collect()
}

/// Human-readable listing of the built-in catalog.
pub fn list_catalog() -> String {
    let mut out = format!("{:<26} {:<12} {:>6} {:>7} {:>12}\n", "key", "family", "dim", "convex", "lipschitz");
    for spec in default_catalog() {
        let family = serde_json::to_value(spec.kind())
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let lip = spec
            .lipschitz()
            .map(|l| format!("{l:.6}"))
            .unwrap_or_else(|| "none".to_string());
        out.push_str(&format!(
            "{:<26} {:<12} {:>6} {:>7} {:>12}\n",
            spec.key(),
            family,
            spec.dim(),
            spec.is_convex(),
            lip
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_in_keys_round_trip() {
        for spec in default_catalog() {
            let again = parse_key(spec.key()).unwrap();
            assert_eq!(again.key(), spec.key());
            assert_eq!(again.dim(), spec.dim());
        }
    }

    #[test]
    fn tilted_key_nests_base() {
        let f = parse_key("tilted:lp:n=100:p=2:t=4").unwrap();
        assert_eq!(f.kind(), FamilyKind::Tilted);
        assert_eq!(f.tilt_base().unwrap().key(), "lp:n=100:p=2");
        assert_eq!(f.lipschitz(), Some(5.0));
    }

    #[test]
    fn lp_inf_is_sup_norm() {
        assert_eq!(parse_key("lp:n=5:p=inf").unwrap().key(), "linf:n=5");
    }

    #[test]
    fn bad_keys_are_rejected() {
        for k in ["", "nope", "lp:n=4", "lp:n=4:p=4:extra=1", "linf:n=x", "tilted:linf:n=4", "galpha:a=1"] {
            assert!(parse_key(k).is_err(), "{k}");
        }
        assert!(matches!(parse_key("xyz:n=3"), Err(Error::UnknownKey(_))));
    }

    #[test]
    fn listing_mentions_every_key() {
        let s = list_catalog();
        for k in DEFAULT_KEYS {
            assert!(s.contains(k));
        }
    }
}
