//! Named colors and the conversions codecs need between names, hex strings
//! and RGB triples.

pub const NAMED_COLORS: [(&str, [u8; 3]); 13] = [
    ("red", [0xff, 0x00, 0x00]),
    ("blue", [0x00, 0x00, 0xff]),
    ("green", [0x00, 0xff, 0x00]),
    ("yellow", [0xff, 0xff, 0x00]),
    ("purple", [0x80, 0x00, 0x80]),
    ("orange", [0xff, 0xa5, 0x00]),
    ("cyan", [0x00, 0xff, 0xff]),
    ("white", [0xff, 0xff, 0xff]),
    ("magenta", [0xff, 0x00, 0xff]),
    ("gray", [0x80, 0x80, 0x80]),
    ("black", [0x00, 0x00, 0x00]),
    ("brown", [0x8b, 0x45, 0x13]),
    ("pink", [0xff, 0xc0, 0xcb]),
];

const ALIASES: [(&str, &str); 6] = [
    ("grey", "gray"),
    ("aqua", "cyan"),
    ("fuchsia", "magenta"),
    ("violet", "purple"),
    ("lime", "green"),
    ("silver", "gray"),
];

/// Canonical spelling for a known color name or alias.
pub fn canonical_name(name: &str) -> Option<&'static str> {
    let n = name.trim().to_lowercase();
    if let Some((c, _)) = NAMED_COLORS.iter().find(|(c, _)| *c == n) {
        return Some(c);
    }
    ALIASES.iter().find(|(a, _)| *a == n).map(|(_, c)| *c)
}

pub fn rgb_of(name: &str) -> Option<[u8; 3]> {
    let c = canonical_name(name)?;
    NAMED_COLORS
        .iter()
        .find(|(n, _)| *n == c)
        .map(|(_, rgb)| *rgb)
}

/// Closest named color by squared RGB distance; ties go to the earlier entry.
pub fn nearest_name(rgb: [f64; 3]) -> &'static str {
    let mut best = ("gray", f64::INFINITY);
    for (name, c) in NAMED_COLORS {
        let d: f64 = (0..3)
            .map(|i| {
                let diff = rgb[i] - f64::from(c[i]) / 255.0;
                diff * diff
            })
            .sum();
        if d < best.1 {
            best = (name, d);
        }
    }
    best.0
}

/// Parses `#rrggbb`, `0xrrggbb` or `rrggbb` into unit RGB.
pub fn parse_hex(s: &str) -> Option<[f64; 3]> {
    let t = s.trim();
    let t = t
        .strip_prefix('#')
        .or_else(|| t.strip_prefix("0x"))
        .or_else(|| t.strip_prefix("0X"))
        .unwrap_or(t);
    if t.len() != 6 || !t.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    let v = u32::from_str_radix(t, 16).ok()?;
    Some([
        f64::from((v >> 16) & 0xff) / 255.0,
        f64::from((v >> 8) & 0xff) / 255.0,
        f64::from(v & 0xff) / 255.0,
    ])
}

pub fn hex_of(name: &str) -> Option<String> {
    rgb_of(name).map(|[r, g, b]| format!("0x{r:02x}{g:02x}{b:02x}"))
}

/// Unit RGB of a named color.
pub fn unit_rgb(name: &str) -> Option<[f64; 3]> {
    rgb_of(name).map(|c| c.map(|v| f64::from(v) / 255.0))
}

/// Resolves a material identifier found in code: a known color name, a hex
/// string, or a name containing a color word (`"red_mat"`); falls back to the
/// lowercased identifier itself.
pub fn resolve_material(raw: &str) -> String {
    let t = raw.trim();
    if let Some(c) = canonical_name(t) {
        return c.to_string();
    }
    if let Some(rgb) = parse_hex(t) {
        return nearest_name(rgb).to_string();
    }
    let lower = t.to_lowercase();
    for word in lower.split(|c: char| !c.is_ascii_alphabetic()) {
        if let Some(c) = canonical_name(word) {
            return c.to_string();
        }
    }
    lower
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn palette_round_trips_through_hex_and_rgb() {
        for (name, _) in NAMED_COLORS {
            let hex = hex_of(name).unwrap();
            assert_eq!(resolve_material(&hex), name);
            assert_eq!(nearest_name(unit_rgb(name).unwrap()), name);
        }
    }

    #[test]
    fn aliases_and_words() {
        assert_eq!(resolve_material("Grey"), "gray");
        assert_eq!(resolve_material("mat_red_01"), "red");
        assert_eq!(resolve_material("Walnut"), "walnut");
        assert_eq!(nearest_name([0.9, 0.1, 0.05]), "red");
        assert_eq!(parse_hex("#zzzzzz"), None);
    }
}
