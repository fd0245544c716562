use num_complex::Complex64;
use serde::ser::SerializeSeq;
use serde::Serializer;

/// Complex vectors as `[[re, im], ...]`.
pub(crate) fn complex_vec<S: Serializer>(v: &[Complex64], serializer: S) -> Result<S::Ok, S::Error> {
    let mut seq = serializer.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// `f64` where `+inf` (noise-free SNR) travels as `null`; `"inf"` is also
/// accepted on input since TOML has no null.
pub(crate) mod snr_db {
    use serde::{Deserialize, Deserializer, Serializer};

    pub(crate) fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub(crate) fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Num(f64),
            Text(String),
        }
        match Option::<Wire>::deserialize(d)? {
            None => Ok(f64::INFINITY),
            Some(Wire::Num(v)) => Ok(v),
            Some(Wire::Text(t)) if matches!(t.as_str(), "inf" | "noise-free") => Ok(f64::INFINITY),
            Some(Wire::Text(t)) => Err(serde::de::Error::custom(format!("invalid SNR {t:?}"))),
        }
    }
}
