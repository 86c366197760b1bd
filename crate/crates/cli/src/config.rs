use std::path::Path;

use anyhow::{bail, Context};
use serde::Deserialize;

use lpstab_core::stability::Budget;
use lpstab_core::{Exponent, Weight};

use crate::Global;

/// Smallest exponent accepted on the command line.
pub const P_FLOOR: f64 = 0.1;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub p_grid: Option<Vec<Exponent>>,
    pub seed: Option<u64>,
    pub budget: Option<BudgetConfig>,
    pub lengths: Option<Vec<f64>>,
    pub windows: Option<Vec<usize>>,
    pub tolerance: Option<f64>,
    pub weight: Option<Weight>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub starts: usize,
    pub iters: usize,
}

/// The configuration after merging the file with the flags.
#[derive(Debug)]
pub struct Resolved {
    pub grid: Vec<Exponent>,
    pub full_grid: bool,
    pub seed: u64,
    pub budget: Budget,
    pub lengths: Option<Vec<f64>>,
    pub windows: Option<Vec<usize>>,
    pub tolerance: f64,
    pub weight: Weight,
}

pub fn parse_grid(text: &str) -> anyhow::Result<Vec<Exponent>> {
    let grid = text
        .split(',')
        .map(|s| s.trim().parse::<Exponent>().with_context(|| format!("bad exponent {s:?} in --p-grid")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if grid.is_empty() {
        bail!("--p-grid is empty");
    }
    Ok(grid)
}

pub fn parse_weight(text: &str) -> anyhow::Result<Weight> {
    let (kind, params) = text.split_once(':').unwrap_or((text, ""));
    let nums = params
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad number {s:?} in --weight")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let w = match (kind, nums.as_slice()) {
        ("poly", [alpha]) => Weight::polynomial(*alpha)?,
        ("subexp", [c, delta]) => Weight::subexponential(*c, *delta)?,
        _ => bail!("--weight must be poly:ALPHA or subexp:C,DELTA, got {text:?}"),
    };
    Ok(w)
}

pub fn resolve(global: &Global, weight_flag: Option<&str>) -> anyhow::Result<Resolved> {
    let file = match &global.config {
        Some(path) => load(path)?,
        None => RunConfig::default(),
    };
    let grid = match &global.p_grid {
        Some(text) => parse_grid(text)?,
        None => file.p_grid.clone().unwrap_or_else(Exponent::default_grid),
    };
    if let Some(p) = grid.iter().find(|p| p.value() < P_FLOOR) {
        bail!("exponent {p} is below the floor {P_FLOOR}");
    }
    let full_grid = [Exponent::ONE, Exponent::TWO, Exponent::INFINITY].iter().all(|p| grid.contains(p));
    if !full_grid && !global.partial_grid {
        bail!("the exponent grid must contain 1, 2 and inf; pass --partial-grid to estimate without a verdict");
    }
    let mut budget = Budget::default();
    if let Some(b) = &file.budget {
        budget.starts = b.starts;
        budget.iters = b.iters;
    }
    let weight = match weight_flag {
        Some(text) => parse_weight(text)?,
        None => file.weight.unwrap_or(Weight::Poly(1.0)).validated()?,
    };
    Ok(Resolved {
        grid,
        full_grid,
        seed: global.seed.or(file.seed).unwrap_or(0),
        budget,
        lengths: file.lengths,
        windows: file.windows,
        tolerance: file.tolerance.unwrap_or(lpstab_core::inverse::DEFAULT_TOL),
        weight,
    })
}

fn load(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| lpstab_core::Error::Format(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_and_weights() {
        let g = parse_grid("1, 2,inf").unwrap();
        assert_eq!(g, vec![Exponent::ONE, Exponent::TWO, Exponent::INFINITY]);
        assert!(parse_grid("1,x").is_err());
        assert_eq!(parse_weight("poly:2").unwrap(), Weight::Poly(2.0));
        assert_eq!(parse_weight("subexp:1,0.5").unwrap(), Weight::Subexp(1.0, 0.5));
        assert!(parse_weight("subexp:1,2").is_err());
        assert!(parse_weight("gauss:1").is_err());
    }

    #[test]
    fn config_file_fields() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"p_grid":[1,"inf",2],"seed":4,"budget":{"starts":3,"iters":10},"weight":{"subexp":[1,0.5]}}"#)
                .unwrap();
        assert_eq!(cfg.p_grid.unwrap()[1], Exponent::INFINITY);
        assert_eq!(cfg.weight, Some(Weight::Subexp(1.0, 0.5)));
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus":1}"#).is_err());
    }
}
