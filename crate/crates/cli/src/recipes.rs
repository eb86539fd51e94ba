//! Configs bundled into the binary, one per reproduced plot.

pub const RECIPES: &[(&str, &str)] = &[
    ("fig2a", include_str!("../recipes/fig2a.toml")),
    ("fig2b", include_str!("../recipes/fig2b.toml")),
    ("fig2c", include_str!("../recipes/fig2c.toml")),
    ("fig2d", include_str!("../recipes/fig2d.toml")),
    ("fig3", include_str!("../recipes/fig3.toml")),
    ("fig4", include_str!("../recipes/fig4.toml")),
    ("fig5", include_str!("../recipes/fig5.toml")),
    ("fig6", include_str!("../recipes/fig6.toml")),
];

pub fn get(name: &str) -> Option<&'static str> {
    RECIPES.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// First comment line of a recipe.
pub fn describe(text: &str) -> &str {
    text.lines()
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .map_or("", str::trim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    #[test]
    fn every_recipe_parses_and_validates() {
        for (name, text) in RECIPES {
            let cfg = RunConfig::from_toml(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.name.as_deref(), Some(*name));
            for (label, run) in cfg.expand() {
                run.check().unwrap_or_else(|e| panic!("{name} {label:?}: {e}"));
                run.optical
                    .resolve()
                    .unwrap_or_else(|e| panic!("{name} {label:?}: {e}"));
            }
            assert!(!describe(text).is_empty());
        }
    }

    #[test]
    fn fig4_grid() {
        let cfg = RunConfig::from_toml(get("fig4").unwrap()).unwrap();
        let ls = cfg.sweep.thickness.unwrap().resolve("sweep.thickness").unwrap();
        assert_eq!(ls.len(), 25);
        assert!((ls[0] - 10e-9).abs() < 1e-20 && (ls[24] - 1e-3).abs() < 1e-15);
    }
}
