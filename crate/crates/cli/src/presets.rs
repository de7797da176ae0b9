//! Configurations of the published experiments, shipped with the binary.

pub const PRESETS: &[(&str, &str)] = &[
    ("fig1", include_str!("../presets/fig1.conf")),
    ("fig2", include_str!("../presets/fig2.conf")),
    ("fig3", include_str!("../presets/fig3.conf")),
    ("fig4", include_str!("../presets/fig4.conf")),
    ("fig5", include_str!("../presets/fig5.conf")),
    ("fig6", include_str!("../presets/fig6.conf")),
    ("fig7", include_str!("../presets/fig7.conf")),
    ("fig8", include_str!("../presets/fig8.conf")),
    ("fig10", include_str!("../presets/fig10.conf")),
    ("fig9", include_str!("../presets/fig9.conf")),
];

pub fn find(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// The `title` line of a preset.
pub fn title(text: &str) -> &str {
    text.lines()
        .find_map(|l| l.trim().strip_prefix("title").and_then(|r| r.trim_start().strip_prefix('=')))
        .map(str::trim)
        .unwrap_or("")
}
