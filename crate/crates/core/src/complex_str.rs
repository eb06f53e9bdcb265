//! Text form of complex numbers used in config files: `"re+imi"`.
//!
//! Accepted inputs include `"0.05"`, `"-2i"`, `"1+2i"`, `"3.5e-2-1e-3i"`. Plain
//! TOML numbers are accepted as real values. Output always uses the full
//! `re+imi` form with shortest round-trip float formatting.

use num_complex::Complex64;
use serde::{de, Deserializer, Serializer};

pub fn format(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

pub fn parse(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err("empty complex literal".into());
    }
    let bad = || format!("invalid complex literal `{s}` (expected re+imi)");
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split at the last sign that is not part of an exponent or the leading sign.
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.trim_start_matches('+').parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format(*z))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
    struct V;
    impl de::Visitor<'_> for V {
        type Value = Complex64;
        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a number or a complex literal \"re+imi\"")
        }
        fn visit_str<E: de::Error>(self, v: &str) -> Result<Complex64, E> {
            parse(v).map_err(E::custom)
        }
        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Complex64, E> {
            Ok(Complex64::new(v, 0.0))
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Complex64, E> {
            Ok(Complex64::new(v as f64, 0.0))
        }
        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Complex64, E> {
            Ok(Complex64::new(v as f64, 0.0))
        }
    }
    d.deserialize_any(V)
}
