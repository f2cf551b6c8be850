use std::collections::BTreeMap;
use std::fmt;

/// Appearance attribute types understood by `appearance(type, value)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AppearanceKey {
    Color,
    Material,
    Ambient,
    Emissive,
    Diffuse,
    Specular,
    Shininess,
    Bump,
    BumpMap,
    BumpWeight,
    Texture,
    Transparency,
}

impl AppearanceKey {
    pub const ALL: [AppearanceKey; 12] = [
        AppearanceKey::Color,
        AppearanceKey::Material,
        AppearanceKey::Ambient,
        AppearanceKey::Emissive,
        AppearanceKey::Diffuse,
        AppearanceKey::Specular,
        AppearanceKey::Shininess,
        AppearanceKey::Bump,
        AppearanceKey::BumpMap,
        AppearanceKey::BumpWeight,
        AppearanceKey::Texture,
        AppearanceKey::Transparency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AppearanceKey::Color => "color",
            AppearanceKey::Material => "material",
            AppearanceKey::Ambient => "ambient",
            AppearanceKey::Emissive => "emissive",
            AppearanceKey::Diffuse => "diffuse",
            AppearanceKey::Specular => "specular",
            AppearanceKey::Shininess => "shininess",
            AppearanceKey::Bump => "bump",
            AppearanceKey::BumpMap => "bumpmap",
            AppearanceKey::BumpWeight => "bumpweight",
            AppearanceKey::Texture => "texture",
            AppearanceKey::Transparency => "transparency",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for AppearanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AppearanceValue {
    Numbers(Vec<f64>),
    Text(String),
}

impl fmt::Display for AppearanceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppearanceValue::Numbers(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
                write!(f, "{{{}}}", parts.join(","))
            }
            AppearanceValue::Text(s) => f.write_str(s),
        }
    }
}

/// Per-shape appearance record. Ordered so that its canonical text form is
/// stable, which the exporter relies on for material naming.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Appearance {
    attrs: BTreeMap<AppearanceKey, AppearanceValue>,
}

impl Appearance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: AppearanceKey, value: AppearanceValue) {
        self.attrs.insert(key, value);
    }

    pub fn get(&self, key: AppearanceKey) -> Option<&AppearanceValue> {
        self.attrs.get(&key)
    }

    pub fn numbers(&self, key: AppearanceKey) -> Option<&[f64]> {
        match self.attrs.get(&key) {
            Some(AppearanceValue::Numbers(v)) => Some(v),
            _ => None,
        }
    }

    pub fn text(&self, key: AppearanceKey) -> Option<&str> {
        match self.attrs.get(&key) {
            Some(AppearanceValue::Text(s)) => Some(s),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.attrs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AppearanceKey, &AppearanceValue)> {
        self.attrs.iter().map(|(k, v)| (*k, v))
    }

    /// `key=value;` pairs in key order.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.attrs {
            out.push_str(k.name());
            out.push('=');
            out.push_str(&v.to_string());
            out.push(';');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_recognized_keys_round_trip_by_name() {
        for k in AppearanceKey::ALL {
            assert_eq!(AppearanceKey::from_name(k.name()), Some(k));
        }
        assert_eq!(AppearanceKey::from_name("Diffuse"), Some(AppearanceKey::Diffuse));
        assert_eq!(AppearanceKey::from_name("glossiness"), None);
    }

    #[test]
    fn canonical_form_is_order_independent() {
        let mut a = Appearance::new();
        a.set(AppearanceKey::Texture, AppearanceValue::Text("rock.jpg".into()));
        a.set(AppearanceKey::Diffuse, AppearanceValue::Numbers(vec![1.0, 0.0, 0.0]));
        let mut b = Appearance::new();
        b.set(AppearanceKey::Diffuse, AppearanceValue::Numbers(vec![1.0, 0.0, 0.0]));
        b.set(AppearanceKey::Texture, AppearanceValue::Text("rock.jpg".into()));
        assert_eq!(a.canonical(), b.canonical());
        assert_eq!(a.canonical(), "diffuse={1,0,0};texture=rock.jpg;");
    }
}
