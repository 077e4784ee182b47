//! Built-in configurations for the benchmark tables.

use crate::basis::BasisKind;
use crate::error::{Error, Result};

use super::config::RunConfig;

pub const PRESETS: [&str; 7] =
    ["basket", "spark", "asian-bs", "asian-lv", "asian-schwartz", "dic-lv", "dic-bs"];

const BASKET: &str = r#"
[model]
kind = "black_scholes"
r = 0.05
sigma = 0.3
S0 = 50.0
d = 2

[payoff]
kind = "basket"
T = 1.0
K = 50.0

[quantization]
N = 200

[mc]
n = 100000
M = 1
"#;

// no rate in the spark-spread setting, so prices are undiscounted
const SPARK: &str = r#"
[model]
kind = "schwartz"
r = 0.0
sigma = [0.7, 0.35]
S0 = [40.0, 4.0]
lambda = 0.3

[payoff]
kind = "spark_spread"
T = 0.5
hR = 10.0
C = 0.0

[quantization]
N = 200

[mc]
n = 100000
M = 1
"#;

const ASIAN_BS: &str = r#"
[model]
kind = "black_scholes"
r = 0.04
sigma = 0.5
S0 = 100.0

[payoff]
kind = "asian"
T = 1.0
K = 115.0
p = 100

[quantization]
dN = 966

[mc]
n = 100000
M = 100
"#;

const ASIAN_LV: &str = r#"
[model]
kind = "local_vol"
r = 0.04
sigma = 5.0
beta = 0.5
x0 = 100.0

[payoff]
kind = "asian"
T = 1.0
K = 115.0
p = 100

[quantization]
dN = 966

[mc]
n = 50000
M = 100
"#;

const ASIAN_SCHWARTZ: &str = r#"
[model]
kind = "schwartz"
r = 0.04
sigma = 0.5
S0 = 100.0
lambda = 0.3

[payoff]
kind = "asian"
T = 1.0
K = 115.0
p = 100

[quantization]
dN = 966

[mc]
n = 100000
M = 100
"#;

const DIC_LV: &str = r#"
[model]
kind = "local_vol"
r = 0.04
sigma = 5.0
beta = 0.5
x0 = 100.0

[payoff]
kind = "down_in_call"
T = 1.0
K = 115.0
L = 65.0

[quantization]
dN = 966

[mc]
n = 50000
M = 100
"#;

const DIC_BS: &str = r#"
[model]
kind = "black_scholes"
r = 0.04
sigma = 0.5
S0 = 100.0

[payoff]
kind = "down_in_call"
T = 1.0
K = 115.0
L = 65.0

[quantization]
dN = 966

[mc]
n = 100000
M = 100
"#;

fn unknown(name: &str) -> Error {
    Error::Config(format!("unknown preset {name:?}; valid presets: {}", PRESETS.join(", ")))
}

/// TOML source of a preset.
pub fn preset_source(name: &str) -> Result<&'static str> {
    Ok(match name {
        "basket" => BASKET,
        "spark" => SPARK,
        "asian-bs" => ASIAN_BS,
        "asian-lv" => ASIAN_LV,
        "asian-schwartz" => ASIAN_SCHWARTZ,
        "dic-lv" => DIC_LV,
        "dic-bs" => DIC_BS,
        _ => return Err(unknown(name)),
    })
}

/// Base configuration of a preset (the first row of its table).
pub fn preset(name: &str) -> Result<RunConfig> {
    RunConfig::from_toml(preset_source(name)?)
}

/// One row of a table: its label columns and full configuration.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub labels: Vec<String>,
    pub config: RunConfig,
}

#[derive(Debug, Clone)]
pub struct TableSpec {
    pub name: String,
    pub label_columns: Vec<&'static str>,
    pub rows: Vec<TableRow>,
}

pub const VALUE_COLUMNS: [&str; 4] = ["price_mc", "variance_mc", "price_qis", "variance_qis"];

/// Basis rows shared by the path tables.
pub const BASIS_ROWS: [(BasisKind, usize); 10] = [
    (BasisKind::Constant, 1),
    (BasisKind::ShiftedLegendre, 2),
    (BasisKind::ShiftedLegendre, 4),
    (BasisKind::ShiftedLegendre, 8),
    (BasisKind::KarhunenLoeve, 2),
    (BasisKind::KarhunenLoeve, 4),
    (BasisKind::KarhunenLoeve, 8),
    (BasisKind::Haar, 2),
    (BasisKind::Haar, 4),
    (BasisKind::Haar, 8),
];

pub fn basis_label(kind: BasisKind) -> &'static str {
    match kind {
        BasisKind::Constant => "Constant",
        BasisKind::ShiftedLegendre => "Legendre",
        BasisKind::KarhunenLoeve => "Karhunen-Loeve",
        BasisKind::Haar => "Haar",
    }
}

/// Rows of a table preset, with `seed` applied to every row.
pub fn table(name: &str, seed: u64) -> Result<TableSpec> {
    let mut base = preset(name)?;
    base.mc.seed = seed;
    let mut rows = Vec::new();
    let label_columns = match name {
        "basket" => {
            for d in 2..=6 {
                for k in [50.0, 55.0, 60.0] {
                    let mut c = base.clone();
                    c.model.d = Some(d);
                    c.payoff.strike = Some(k);
                    rows.push(TableRow { labels: vec![d.to_string(), k.to_string()], config: c });
                }
            }
            vec!["d", "K"]
        }
        "spark" => {
            for cost in [0.0, 3.0, 5.0, 8.0, 10.0, 12.0] {
                let mut c = base.clone();
                c.payoff.cost = Some(cost);
                rows.push(TableRow { labels: vec![cost.to_string()], config: c });
            }
            vec!["C"]
        }
        _ => {
            for (kind, m) in BASIS_ROWS {
                let mut c = base.clone();
                c.basis.kind = kind;
                c.basis.m = m;
                rows.push(TableRow {
                    labels: vec![basis_label(kind).to_string(), m.to_string()],
                    config: c,
                });
            }
            vec!["basis", "m"]
        }
    };
    Ok(TableSpec { name: name.to_string(), label_columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            c.validate().unwrap();
            let t = table(name, 3).unwrap();
            assert!(!t.rows.is_empty());
            for row in &t.rows {
                row.config.validate().unwrap();
                assert_eq!(row.config.mc.seed, 3);
                assert_eq!(row.labels.len(), t.label_columns.len());
            }
        }
    }

    #[test]
    fn table_shapes() {
        let t = table("basket", 1).unwrap();
        assert_eq!(t.rows.len(), 15);
        assert_eq!(t.label_columns.len() + VALUE_COLUMNS.len(), 6);
        assert_eq!(table("spark", 1).unwrap().rows.len(), 6);
        assert_eq!(table("dic-bs", 1).unwrap().rows.len(), 10);
        let err = preset("nope").unwrap_err().to_string();
        assert!(err.contains("asian-schwartz"), "{err}");
    }
}
