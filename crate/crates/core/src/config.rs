//! Flat `key = value` configuration, one entry per line, `#` starts a comment.
//! Every key is optional; unknown keys and repeated keys are errors.
//! Angles are given in degrees.

use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::LineMatcher;
use crate::pipeline::PipelineConfig;
use crate::vocab::SearchMode;

const DEFAULT_BACKTRACK: usize = 4;

fn value<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("line {line}: invalid value {raw:?} for {key}")))
}

fn backtrack(cfg: &PipelineConfig) -> usize {
    match cfg.vocab.search {
        SearchMode::Approximate { backtrack } => backtrack,
        SearchMode::Exact => DEFAULT_BACKTRACK,
    }
}

/// Applies one `key = value` pair.
fn apply(cfg: &mut PipelineConfig, key: &str, raw: &str, line: usize) -> Result<()> {
    let e = &mut cfg.extraction;
    let v = &mut cfg.vocab;
    let g = &mut cfg.geometry;
    match key {
        "max_points" => e.max_points = value(key, raw, line)?,
        "max_lines" => e.max_lines = value(key, raw, line)?,
        "min_line_length" => e.min_line_length = value(key, raw, line)?,
        "fast_threshold" => e.fast_threshold = value(key, raw, line)?,
        "band_count" => e.band_count = value(key, raw, line)?,
        "band_width" => e.band_width = value(key, raw, line)?,
        "branching" => v.branching = value(key, raw, line)?,
        "leaf_capacity" => v.leaf_capacity = value(key, raw, line)?,
        "merge_threshold" => v.merge_threshold = value(key, raw, line)?,
        "exact_search" => {
            let exact: bool = value(key, raw, line)?;
            v.search = if exact {
                SearchMode::Exact
            } else {
                SearchMode::Approximate {
                    backtrack: DEFAULT_BACKTRACK,
                }
            };
        }
        "backtrack_budget" => {
            let b = value(key, raw, line)?;
            if !matches!(v.search, SearchMode::Exact) {
                v.search = SearchMode::Approximate { backtrack: b };
            }
        }
        "max_word_distance" => v.max_word_distance = value(key, raw, line)?,
        "max_results" => v.max_results = value(key, raw, line)?,
        "prune_threshold" => v.prune_threshold = value(key, raw, line)?,
        "penalty_factor" => cfg.fusion.penalty_factor = value(key, raw, line)?,
        "island_gap" => cfg.island_gap = value(key, raw, line)?,
        "nndr_ratio" => g.nndr_ratio = value(key, raw, line)?,
        "single_match_max_distance" => g.single_match_max_distance = value(key, raw, line)?,
        "alpha_max_deg" => g.alpha_max = value::<f64>(key, raw, line)?.to_radians(),
        "rotation_bin_deg" => g.rotation_bin = value::<f64>(key, raw, line)?.to_radians(),
        "rotation_salience" => g.rotation_salience = value(key, raw, line)?,
        "rotation_prefilter" => g.rotation_prefilter = value(key, raw, line)?,
        "line_matcher" => {
            g.line_matcher = match raw {
                "filtered" => LineMatcher::Filtered,
                "nndr" => LineMatcher::PlainNndr,
                _ => {
                    return Err(Error::Config(format!(
                        "line {line}: line_matcher must be filtered or nndr"
                    )))
                }
            }
        }
        "ransac_max_iterations" => g.ransac_max_iterations = value(key, raw, line)?,
        "ransac_confidence" => g.ransac_confidence = value(key, raw, line)?,
        "epipolar_tolerance" => g.epipolar_tolerance = value(key, raw, line)?,
        "min_inliers" => g.min_inliers = value(key, raw, line)?,
        "gating_window" => cfg.gating_window = value(key, raw, line)?,
        "seed" => cfg.seed = value(key, raw, line)?,
        "record_timings" => cfg.record_timings = value(key, raw, line)?,
        _ => return Err(Error::Config(format!("line {line}: unknown key {key:?}"))),
    }
    Ok(())
}

/// Parses a configuration on top of the defaults and validates the result.
pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    let mut seen = BTreeSet::new();
    // exact_search wins over backtrack_budget regardless of order
    let mut budget: Option<(String, usize)> = None;
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, raw) = content
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {line}: expected key = value")))?;
        let (key, raw) = (key.trim(), raw.trim());
        if !seen.insert(key.to_string()) {
            return Err(Error::Config(format!("line {line}: duplicate key {key:?}")));
        }
        if key == "backtrack_budget" {
            budget = Some((raw.to_string(), line));
            continue;
        }
        apply(&mut cfg, key, raw, line)?;
    }
    if let Some((raw, line)) = budget {
        apply(&mut cfg, "backtrack_budget", &raw, line)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// The configuration in the same format, every key listed.
pub fn write_config(cfg: &PipelineConfig) -> String {
    let e = &cfg.extraction;
    let v = &cfg.vocab;
    let g = &cfg.geometry;
    let mut out = String::new();
    let mut put = |k: &str, val: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&val);
        out.push('\n');
    };
    put("max_points", e.max_points.to_string());
    put("max_lines", e.max_lines.to_string());
    put("min_line_length", e.min_line_length.to_string());
    put("fast_threshold", e.fast_threshold.to_string());
    put("band_count", e.band_count.to_string());
    put("band_width", e.band_width.to_string());
    put("branching", v.branching.to_string());
    put("leaf_capacity", v.leaf_capacity.to_string());
    put("merge_threshold", v.merge_threshold.to_string());
    put("exact_search", matches!(v.search, SearchMode::Exact).to_string());
    put("backtrack_budget", backtrack(cfg).to_string());
    put("max_word_distance", v.max_word_distance.to_string());
    put("max_results", v.max_results.to_string());
    put("prune_threshold", v.prune_threshold.to_string());
    put("penalty_factor", cfg.fusion.penalty_factor.to_string());
    put("island_gap", cfg.island_gap.to_string());
    put("nndr_ratio", g.nndr_ratio.to_string());
    put("single_match_max_distance", g.single_match_max_distance.to_string());
    put("alpha_max_deg", g.alpha_max.to_degrees().to_string());
    put("rotation_bin_deg", g.rotation_bin.to_degrees().to_string());
    put("rotation_salience", g.rotation_salience.to_string());
    put("rotation_prefilter", g.rotation_prefilter.to_string());
    put(
        "line_matcher",
        match g.line_matcher {
            LineMatcher::Filtered => "filtered",
            LineMatcher::PlainNndr => "nndr",
        }
        .to_string(),
    );
    put("ransac_max_iterations", g.ransac_max_iterations.to_string());
    put("ransac_confidence", g.ransac_confidence.to_string());
    put("epipolar_tolerance", g.epipolar_tolerance.to_string());
    put("min_inliers", g.min_inliers.to_string());
    put("gating_window", cfg.gating_window.to_string());
    put("seed", cfg.seed.to_string());
    put("record_timings", cfg.record_timings.to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(parse_config("").unwrap(), PipelineConfig::default());
        assert_eq!(parse_config("# only a comment\n\n").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn overrides_and_comments() {
        let cfg = parse_config("min_inliers = 20  # stricter\nalpha_max_deg=5\nexact_search = true\n").unwrap();
        assert_eq!(cfg.geometry.min_inliers, 20);
        assert!((cfg.geometry.alpha_max - 5f64.to_radians()).abs() < 1e-15);
        assert_eq!(cfg.vocab.search, SearchMode::Exact);
    }

    #[test]
    fn backtrack_is_order_independent() {
        let a = parse_config("backtrack_budget = 9\nexact_search = false").unwrap();
        let b = parse_config("exact_search = false\nbacktrack_budget = 9").unwrap();
        assert_eq!(a.vocab.search, SearchMode::Approximate { backtrack: 9 });
        assert_eq!(a, b);
    }

    #[test]
    fn errors() {
        for bad in [
            "nonsense = 1",
            "min_inliers",
            "min_inliers = many",
            "seed = 1\nseed = 2",
            "band_count = 8",
            "line_matcher = fuzzy",
        ] {
            assert!(matches!(parse_config(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn written_config_parses_back() {
        let mut cfg = PipelineConfig::default();
        cfg.seed = 99;
        cfg.record_timings = false;
        cfg.geometry.line_matcher = LineMatcher::PlainNndr;
        let back = parse_config(&write_config(&cfg)).unwrap();
        assert_eq!(back.seed, 99);
        assert!(!back.record_timings);
        assert_eq!(back.geometry.line_matcher, LineMatcher::PlainNndr);
        assert_eq!(back.vocab, cfg.vocab);
        assert!((back.geometry.alpha_max - cfg.geometry.alpha_max).abs() < 1e-12);
    }
}
