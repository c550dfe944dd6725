/// Allowed values of a config knob, as recorded on a card.
#[derive(Clone, Debug, PartialEq)]
pub enum KnobRange {
    /// Inclusive numeric interval `lo..hi`.
    Numeric { lo: f64, hi: f64 },
    /// `{a,b,c}`.
    Enumerated(Vec<String>),
}

impl KnobRange {
    pub fn parse(text: &str) -> Option<Self> {
        let t = text.trim();
        if let Some(inner) = t.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
            let items: Vec<String> = inner.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            return (!items.is_empty()).then_some(KnobRange::Enumerated(items));
        }
        let (lo, hi) = t.split_once("..")?;
        let (lo, hi) = (lo.trim().parse::<f64>().ok()?, hi.trim().parse::<f64>().ok()?);
        (lo <= hi).then_some(KnobRange::Numeric { lo, hi })
    }

    pub fn contains(&self, value: &str) -> bool {
        let v = value.trim();
        match self {
            KnobRange::Numeric { lo, hi } => v.parse::<f64>().is_ok_and(|x| *lo <= x && x <= *hi),
            KnobRange::Enumerated(items) => {
                items.iter().any(|i| i == v || matches!((i.parse::<f64>(), v.parse::<f64>()), (Ok(a), Ok(b)) if a == b))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_bounds_inclusive() {
        let r = KnobRange::parse("1..10").unwrap();
        assert!(r.contains("1") && r.contains("10") && r.contains("5.5"));
        assert!(!r.contains("0") && !r.contains("10.01") && !r.contains("x"));
    }

    #[test]
    fn enumerated_values() {
        let r = KnobRange::parse("{1, 2,4,8}").unwrap();
        assert!(r.contains("4") && r.contains("4.0"));
        assert!(!r.contains("3"));
        let r = KnobRange::parse("{fast,slow}").unwrap();
        assert!(r.contains("slow") && !r.contains("medium"));
    }

    #[test]
    fn malformed_ranges() {
        for t in ["", "1..", "..2", "5..1", "{}", "a..b", "1-10"] {
            assert_eq!(KnobRange::parse(t), None, "{t}");
        }
    }
}
