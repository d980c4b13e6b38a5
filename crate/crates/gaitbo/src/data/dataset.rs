use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::costs::{score_transform, CostKind, CostSpec};
use crate::error::{Error, Result};
use crate::sim::{
    rollout, Bounds, ControllerFamily, GroundProfile, PerturbationFactors, SimConfig,
    TrajectorySummary,
};

use super::digest_hex;
use super::sobol::sobol_grid;

/// Format every float with 17 significant digits so values round-trip
/// bit-exactly through the text file.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One evaluated grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct GaitRecord {
    pub params: Vec<f64>,
    pub t_walk: f64,
    pub energy: f64,
    pub x_torso: f64,
    pub z_torso: f64,
    pub theta_torso: f64,
    pub x_com: f64,
    pub z_com: f64,
    pub v_mean: f64,
    pub fell: bool,
    pub x_fall: f64,
    pub cost: f64,
    pub score: Option<f64>,
}

impl GaitRecord {
    fn new(params: Vec<f64>, s: &TrajectorySummary, cost: f64) -> Self {
        GaitRecord {
            params,
            t_walk: s.t_walk,
            energy: s.energy,
            x_torso: s.x_torso,
            z_torso: s.z_torso,
            theta_torso: s.theta_torso,
            x_com: s.x_com,
            z_com: s.z_com,
            v_mean: s.v_mean,
            fell: s.fell,
            x_fall: s.x_fall,
            cost,
            score: None,
        }
    }

    /// The eight trajectory regression targets, in column order.
    pub fn vector8(&self) -> [f64; 8] {
        [
            self.t_walk,
            self.energy,
            self.x_torso,
            self.z_torso,
            self.theta_torso,
            self.x_com,
            self.z_com,
            self.v_mean,
        ]
    }
}

/// A gait dataset: the evaluation context plus one record per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub family: ControllerFamily,
    pub bounds: Bounds,
    pub cost: CostSpec,
    pub horizon: f64,
    pub sim_digest: String,
    pub perturb: PerturbationFactors,
    pub ground: GroundProfile,
    /// Mean cost over non-fallen rows; absent when every row fell.
    pub c_walk: Option<f64>,
    pub records: Vec<GaitRecord>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// Fraction of rows that did not fall.
    pub fn walking_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| !r.fell).count() as f64 / self.records.len() as f64
    }
}

/// Evaluate a Sobol grid of `n` controllers and assemble the dataset.
/// Rollouts run in parallel; the row order is the grid order regardless of
/// scheduling, and a diverged rollout is recorded as a fall on the spot with
/// the failure cost.
pub fn generate_dataset(
    cfg: &SimConfig,
    family: ControllerFamily,
    bounds: &Bounds,
    cost: &CostSpec,
    n: usize,
    perturb: &PerturbationFactors,
    ground: &GroundProfile,
) -> Result<Dataset> {
    cfg.validate()?;
    if bounds.dim() != family.dim() {
        return Err(Error::config(format!(
            "bounds have {} dimensions but {} needs {}",
            bounds.dim(),
            family.label(),
            family.dim()
        )));
    }
    if n == 0 {
        return Err(Error::config("dataset size must be positive"));
    }
    let grid = sobol_grid(bounds, n)?;
    let mut records: Vec<GaitRecord> = grid
        .into_par_iter()
        .map(|params| {
            let summary = rollout(cfg, family, &params, perturb, ground)
                .unwrap_or_else(|_| TrajectorySummary::failed());
            let c = cost.evaluate(&summary);
            GaitRecord::new(params, &summary, c)
        })
        .collect();

    let walkers: Vec<f64> = records
        .iter()
        .filter(|r| !r.fell)
        .map(|r| r.cost)
        .collect();
    let c_walk = if walkers.is_empty() {
        None
    } else {
        Some(walkers.iter().sum::<f64>() / walkers.len() as f64)
    };
    if let Some(cw) = c_walk {
        for r in &mut records {
            r.score = Some(score_transform(r.cost, cw));
        }
    }

    Ok(Dataset {
        family,
        bounds: bounds.clone(),
        cost: cost.clone(),
        horizon: cfg.horizon,
        sim_digest: digest_hex(cfg),
        perturb: *perturb,
        ground: ground.clone(),
        c_walk,
        records,
    })
}

const MAGIC: &str = "# gait dataset v1";

fn join_f64(vals: &[f64]) -> String {
    let parts: Vec<String> = vals.iter().map(|&v| fmt_f64(v)).collect();
    parts.join(",")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Dataset(format!("bad float {s:?}")))
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_f64).collect()
}

impl Dataset {
    /// Render to the CSV text format: `# key=value` header lines, a column
    /// header, then one row per record.  The score column exists only when
    /// `c_walk` is defined.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let d = self.dim();
        writeln!(out, "{MAGIC}").unwrap();
        writeln!(out, "# family={}", self.family.label()).unwrap();
        writeln!(out, "# d={d}").unwrap();
        writeln!(out, "# n={}", self.records.len()).unwrap();
        writeln!(out, "# low={}", join_f64(&self.bounds.low)).unwrap();
        writeln!(out, "# high={}", join_f64(&self.bounds.high)).unwrap();
        writeln!(out, "# cost={}", self.cost.kind.label()).unwrap();
        writeln!(out, "# v_tgt={}", join_f64(&self.cost.v_tgt)).unwrap();
        writeln!(out, "# weight={}", fmt_f64(self.cost.weight)).unwrap();
        writeln!(out, "# horizon={}", fmt_f64(self.horizon)).unwrap();
        writeln!(out, "# sim_digest={}", self.sim_digest).unwrap();
        let p = &self.perturb;
        if *p != PerturbationFactors::identity() {
            writeln!(
                out,
                "# perturb={}",
                join_f64(&[p.mass_scale, p.inertia_scale, p.com_scale])
            )
            .unwrap();
        }
        if !self.ground.is_flat() {
            let segs: Vec<String> = self
                .ground
                .breaks()
                .iter()
                .skip(1)
                .map(|&(x, h)| format!("{}:{}", fmt_f64(x), fmt_f64(h)))
                .collect();
            writeln!(out, "# ground={}", segs.join(";")).unwrap();
        }
        writeln!(out, "# c_walk_defined={}", self.c_walk.is_some()).unwrap();
        if let Some(cw) = self.c_walk {
            writeln!(out, "# c_walk={}", fmt_f64(cw)).unwrap();
        }

        let mut cols: Vec<String> = (0..d).map(|i| format!("param_{i}")).collect();
        cols.extend(
            [
                "t_walk", "energy", "x_torso", "z_torso", "theta_torso", "x_com", "z_com",
                "v_mean", "fell", "x_fall", "cost",
            ]
            .map(String::from),
        );
        if self.c_walk.is_some() {
            cols.push("score".into());
        }
        writeln!(out, "{}", cols.join(",")).unwrap();

        for r in &self.records {
            let mut fields: Vec<String> = r.params.iter().map(|&v| fmt_f64(v)).collect();
            for v in r.vector8() {
                fields.push(fmt_f64(v));
            }
            // insert fell/x_fall between v_mean and cost per the column order
            fields.push(if r.fell { "1".into() } else { "0".into() });
            fields.push(fmt_f64(r.x_fall));
            fields.push(fmt_f64(r.cost));
            if let Some(s) = r.score {
                fields.push(fmt_f64(s));
            }
            writeln!(out, "{}", fields.join(",")).unwrap();
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Dataset> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
            .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))
    }

    pub fn from_csv(text: &str) -> Result<Dataset> {
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(Error::Dataset("missing dataset magic line".into()));
        }
        let mut family = None;
        let mut d = None;
        let mut n = None;
        let mut low = None;
        let mut high = None;
        let mut cost_kind = None;
        let mut v_tgt = None;
        let mut weight = None;
        let mut horizon = None;
        let mut sim_digest = None;
        let mut perturb = PerturbationFactors::identity();
        let mut ground = GroundProfile::flat();
        let mut c_walk_defined = None;
        let mut c_walk = None;

        let mut header_line = None;
        for line in lines.by_ref() {
            if let Some(rest) = line.strip_prefix("# ") {
                let (key, value) = rest
                    .split_once('=')
                    .ok_or_else(|| Error::Dataset(format!("bad header line {line:?}")))?;
                match key {
                    "family" => {
                        family = Some(match value {
                            "gains5" => ControllerFamily::Gains5,
                            "phase_gains13" => ControllerFamily::PhaseGains13,
                            other => {
                                return Err(Error::Dataset(format!(
                                    "unknown controller family {other:?}"
                                )))
                            }
                        })
                    }
                    "d" => {
                        d = Some(value.parse::<usize>().map_err(|_| {
                            Error::Dataset(format!("bad dimension {value:?}"))
                        })?)
                    }
                    "n" => {
                        n = Some(value.parse::<usize>().map_err(|_| {
                            Error::Dataset(format!("bad row count {value:?}"))
                        })?)
                    }
                    "low" => low = Some(parse_f64_list(value)?),
                    "high" => high = Some(parse_f64_list(value)?),
                    "cost" => {
                        cost_kind = Some(match value {
                            "atrias" => CostKind::Atrias,
                            "smooth" => CostKind::Smooth,
                            "non_smooth" => CostKind::NonSmooth,
                            other => {
                                return Err(Error::Dataset(format!("unknown cost {other:?}")))
                            }
                        })
                    }
                    "v_tgt" => v_tgt = Some(parse_f64_list(value)?),
                    "weight" => weight = Some(parse_f64(value)?),
                    "horizon" => horizon = Some(parse_f64(value)?),
                    "sim_digest" => sim_digest = Some(value.to_string()),
                    "perturb" => {
                        let f = parse_f64_list(value)?;
                        if f.len() != 3 {
                            return Err(Error::Dataset("perturb needs three factors".into()));
                        }
                        perturb = PerturbationFactors {
                            mass_scale: f[0],
                            inertia_scale: f[1],
                            com_scale: f[2],
                        };
                    }
                    "ground" => {
                        let mut breaks = vec![(f64::NEG_INFINITY, 0.0)];
                        for seg in value.split(';') {
                            let (x, h) = seg.split_once(':').ok_or_else(|| {
                                Error::Dataset(format!("bad ground segment {seg:?}"))
                            })?;
                            breaks.push((parse_f64(x)?, parse_f64(h)?));
                        }
                        ground = GroundProfile::from_breaks(breaks)
                            .map_err(|e| Error::Dataset(e.to_string()))?;
                    }
                    "c_walk_defined" => {
                        c_walk_defined = Some(value == "true");
                    }
                    "c_walk" => c_walk = Some(parse_f64(value)?),
                    other => {
                        return Err(Error::Dataset(format!("unknown header key {other:?}")))
                    }
                }
            } else {
                header_line = Some(line);
                break;
            }
        }

        let family = family.ok_or_else(|| Error::Dataset("missing family".into()))?;
        let d = d.ok_or_else(|| Error::Dataset("missing d".into()))?;
        let n = n.ok_or_else(|| Error::Dataset("missing n".into()))?;
        let bounds = Bounds::new(
            low.ok_or_else(|| Error::Dataset("missing low".into()))?,
            high.ok_or_else(|| Error::Dataset("missing high".into()))?,
        )
        .map_err(|e| Error::Dataset(e.to_string()))?;
        if bounds.dim() != d {
            return Err(Error::Dataset("bounds disagree with d".into()));
        }
        let cost = CostSpec {
            kind: cost_kind.ok_or_else(|| Error::Dataset("missing cost".into()))?,
            v_tgt: v_tgt.ok_or_else(|| Error::Dataset("missing v_tgt".into()))?,
            weight: weight.ok_or_else(|| Error::Dataset("missing weight".into()))?,
        };
        let horizon = horizon.ok_or_else(|| Error::Dataset("missing horizon".into()))?;
        let sim_digest = sim_digest.ok_or_else(|| Error::Dataset("missing sim_digest".into()))?;
        let c_walk_defined =
            c_walk_defined.ok_or_else(|| Error::Dataset("missing c_walk_defined".into()))?;
        if c_walk_defined != c_walk.is_some() {
            return Err(Error::Dataset("c_walk flag disagrees with value".into()));
        }

        let expected_cols = d + 11 + usize::from(c_walk.is_some());
        let header_line =
            header_line.ok_or_else(|| Error::Dataset("missing column header".into()))?;
        if header_line.split(',').count() != expected_cols {
            return Err(Error::Dataset(format!(
                "expected {expected_cols} columns, header has {}",
                header_line.split(',').count()
            )));
        }

        let mut records = Vec::with_capacity(n);
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != expected_cols {
                return Err(Error::Dataset(format!(
                    "row with {} fields, expected {expected_cols}",
                    fields.len()
                )));
            }
            let params = fields[..d]
                .iter()
                .map(|s| parse_f64(s))
                .collect::<Result<Vec<f64>>>()?;
            let num = |i: usize| parse_f64(fields[d + i]);
            records.push(GaitRecord {
                params,
                t_walk: num(0)?,
                energy: num(1)?,
                x_torso: num(2)?,
                z_torso: num(3)?,
                theta_torso: num(4)?,
                x_com: num(5)?,
                z_com: num(6)?,
                v_mean: num(7)?,
                fell: match fields[d + 8] {
                    "0" => false,
                    "1" => true,
                    other => return Err(Error::Dataset(format!("bad fell flag {other:?}"))),
                },
                x_fall: num(9)?,
                cost: num(10)?,
                score: if c_walk.is_some() {
                    Some(num(11)?)
                } else {
                    None
                },
            });
        }
        if records.len() != n {
            return Err(Error::Dataset(format!(
                "header claims {n} rows, file has {}",
                records.len()
            )));
        }

        Ok(Dataset {
            family,
            bounds,
            cost,
            horizon,
            sim_digest,
            perturb,
            ground,
            c_walk,
            records,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_dataset() -> Dataset {
        let cfg = SimConfig {
            horizon: 0.8,
            ..SimConfig::default()
        };
        let bounds = Bounds::new(
            vec![0.1, 0.0, 0.28, 60.0, 5.0],
            vec![0.45, 0.3, 0.45, 320.0, 45.0],
        )
        .unwrap();
        let cost = CostSpec::atrias(vec![1.0]);
        generate_dataset(
            &cfg,
            ControllerFamily::Gains5,
            &bounds,
            &cost,
            40,
            &PerturbationFactors::identity(),
            &GroundProfile::flat(),
        )
        .unwrap()
    }

    #[test]
    fn roundtrip_is_byte_identical() {
        let ds = small_dataset();
        let text = ds.to_csv();
        let back = Dataset::from_csv(&text).unwrap();
        assert_eq!(back.to_csv(), text);
        assert_eq!(back, ds);
    }

    #[test]
    fn regeneration_is_byte_identical() {
        let a = small_dataset().to_csv();
        let b = small_dataset().to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn header_records_grid_shape() {
        let ds = small_dataset();
        let text = ds.to_csv();
        assert!(text.contains("# family=gains5\n"));
        assert!(text.contains("# d=5\n"));
        assert!(text.contains("# n=40\n"));
        assert!(text.contains("# cost=atrias\n"));
        assert!(text.contains("# sim_digest="));
        let header = text
            .lines()
            .find(|l| !l.starts_with('#'))
            .unwrap();
        assert!(header.starts_with("param_0,param_1,param_2,param_3,param_4,t_walk,"));
        assert!(header.ends_with("v_mean,fell,x_fall,cost,score"));
    }

    #[test]
    fn all_fall_grid_drops_score_column() {
        let cfg = SimConfig {
            horizon: 0.8,
            ..SimConfig::default()
        };
        // zero pitch gains everywhere: every rollout falls
        let bounds = Bounds::new(
            vec![0.1, 0.0, 0.28, 0.0, 0.0],
            vec![0.45, 0.3, 0.45, 1e-6, 1e-6],
        )
        .unwrap();
        let ds = generate_dataset(
            &cfg,
            ControllerFamily::Gains5,
            &bounds,
            &CostSpec::atrias(vec![1.0]),
            20,
            &PerturbationFactors::identity(),
            &GroundProfile::flat(),
        )
        .unwrap();
        assert!(ds.c_walk.is_none());
        assert_eq!(ds.walking_fraction(), 0.0);
        let text = ds.to_csv();
        assert!(text.contains("# c_walk_defined=false\n"));
        assert!(!text.contains("score"));
        let back = Dataset::from_csv(&text).unwrap();
        assert_eq!(back.to_csv(), text);
    }

    #[test]
    fn c_walk_is_mean_over_walking_rows() {
        let ds = small_dataset();
        let walkers: Vec<f64> = ds
            .records
            .iter()
            .filter(|r| !r.fell)
            .map(|r| r.cost)
            .collect();
        match ds.c_walk {
            Some(cw) => {
                let mean = walkers.iter().sum::<f64>() / walkers.len() as f64;
                assert!((cw - mean).abs() < 1e-12);
                for r in &ds.records {
                    let expect = score_transform(r.cost, cw);
                    assert_eq!(r.score.unwrap().to_bits(), expect.to_bits());
                }
            }
            None => assert!(walkers.is_empty()),
        }
    }

    #[test]
    fn non_flat_context_roundtrips() {
        let cfg = SimConfig {
            horizon: 0.6,
            ..SimConfig::default()
        };
        let bounds = Bounds::new(
            vec![0.1, 0.0, 0.28, 60.0, 5.0],
            vec![0.45, 0.3, 0.45, 320.0, 45.0],
        )
        .unwrap();
        let ds = generate_dataset(
            &cfg,
            ControllerFamily::Gains5,
            &bounds,
            &CostSpec::atrias(vec![1.0]),
            10,
            &crate::sim::perturbation_factors(4),
            &crate::sim::rough_ground(2, 10.0),
        )
        .unwrap();
        let text = ds.to_csv();
        assert!(text.contains("# perturb="));
        assert!(text.contains("# ground="));
        let back = Dataset::from_csv(&text).unwrap();
        assert_eq!(back, ds);
    }
}
