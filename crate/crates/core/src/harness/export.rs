//! CSV, heatmap and manifest writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::equilibrium::{EquilibriumPoint, RadialProfile};
use crate::error::{LvtError, Result};
use crate::indicators::{IndicatorSeries, Lorenz};
use crate::model::{FieldPair, Grid, GridSpec};
use crate::pde::SimTrace;
use crate::stochastic::PathBundle;

use super::rings::RingComparison;
use super::robustness::RobustnessReport;
use super::scenario::HeatmapFormat;

/// Files written under one output root, in creation order.
#[derive(Debug, Default)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| LvtError::io(&root, e))?;
        Ok(OutputDir {
            root,
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Relative paths of every file written so far.
    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    /// Takes over the files written by a per-job directory below this one.
    pub fn absorb(&mut self, sub: OutputDir) {
        let prefix = sub.root.strip_prefix(&self.root).map(Path::to_path_buf).unwrap_or_default();
        self.files.extend(sub.files.into_iter().map(|f| prefix.join(f)));
    }

    pub fn write_bytes(&mut self, rel: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
        let rel = rel.as_ref();
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| LvtError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| LvtError::io(&path, e))?;
        self.files.push(rel.to_path_buf());
        Ok(())
    }

    pub fn write_csv(&mut self, rel: impl AsRef<Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| LvtError::Config(e.to_string()))?;
        self.write_bytes(rel, &bytes)
    }

    /// Writes `manifest.txt` with `relative-path<TAB>sha256` for every file.
    pub fn write_manifest(&mut self) -> Result<()> {
        let mut text = String::new();
        for rel in &self.files {
            let path = self.root.join(rel);
            let bytes = fs::read(&path).map_err(|e| LvtError::io(&path, e))?;
            let digest = hex::encode(Sha256::digest(&bytes));
            let rel = rel.to_string_lossy().replace('\\', "/");
            writeln!(text, "{rel}\t{digest}").expect("string write");
        }
        let path = self.root.join("manifest.txt");
        fs::write(&path, text).map_err(|e| LvtError::io(&path, e))
    }
}

fn f(x: f64) -> String {
    format!("{x}")
}

pub fn field_rows(gs: &GridSpec, s: &FieldPair) -> Vec<Vec<String>> {
    let (nx, ny) = gs.shape();
    let mut rows = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            rows.push(vec![
                i.to_string(),
                j.to_string(),
                f(gs.x(i)),
                f(gs.y(j)),
                f(s.v[[i, j]]),
                f(s.k[[i, j]]),
            ]);
        }
    }
    rows
}

pub const FIELD_HEADER: [&str; 6] = ["i", "j", "x", "y", "V", "K"];
pub const TRACE_HEADER: [&str; 3] = ["t", "mean_V", "mean_K"];
pub const SCAN_HEADER: [&str; 9] = ["tau", "mu", "A", "exists", "V_star", "K_star", "trace_J", "det_J", "classification"];
pub const RADIAL_HEADER: [&str; 7] = ["d", "A", "mu", "tau_c", "margin", "V_star", "K_star"];
pub const INDICATOR_HEADER: [&str; 8] = ["t", "R_tax", "R_tax_AD", "V_bar", "R_KV", "R_KV_adj", "Y_adj_bar", "NPV_bar"];
pub const LORENZ_HEADER: [&str; 2] = ["pop_share", "psi_share"];
pub const PATH_HEADER: [&str; 6] = ["path", "t", "A", "mu", "V", "K"];
pub const SUMMARY_HEADER: [&str; 9] = ["t", "mean_V", "var_V", "q05_V", "q95_V", "mean_K", "var_K", "q05_K", "q95_K"];
pub const BIFURCATION_HEADER: [&str; 3] = ["tau", "mean_V", "mean_K"];

pub fn trace_rows(tr: &SimTrace) -> Vec<Vec<String>> {
    tr.times
        .iter()
        .zip(&tr.mean_v)
        .zip(&tr.mean_k)
        .map(|((t, v), k)| vec![f(*t), f(*v), f(*k)])
        .collect()
}

pub fn scan_row(tau: f64, mu: f64, a: f64, e: &EquilibriumPoint) -> Vec<String> {
    let opt = |x: Option<f64>| x.map(f).unwrap_or_default();
    vec![
        f(tau),
        f(mu),
        f(a),
        e.exists.to_string(),
        f(e.v_star),
        f(e.k_star),
        opt(e.trace_j),
        opt(e.det_j),
        e.classification.as_str().to_string(),
    ]
}

pub fn radial_rows(r: &RadialProfile) -> Vec<Vec<String>> {
    let margin = r.margin();
    (0..r.distances.len())
        .map(|n| {
            vec![
                f(r.distances[n]),
                f(r.a[n]),
                f(r.mu[n]),
                f(r.tau_c[n]),
                f(margin[n]),
                f(r.points[n].v_star),
                f(r.points[n].k_star),
            ]
        })
        .collect()
}

pub fn indicator_rows(s: &IndicatorSeries) -> Vec<Vec<String>> {
    (0..s.times.len())
        .map(|n| {
            vec![
                f(s.times[n]),
                f(s.r_tax[n]),
                f(s.r_tax_ad[n]),
                f(s.v_bar[n]),
                f(s.r_kv[n]),
                f(s.r_kv_adj[n]),
                f(s.y_adj_bar[n]),
                f(s.npv_bar[n]),
            ]
        })
        .collect()
}

/// Lorenz curve CSV followed by a `gini=<value>` line.
pub fn lorenz_bytes(l: &Lorenz) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(LORENZ_HEADER)?;
    for (x, y) in &l.points {
        w.write_record([f(*x), f(*y)])?;
    }
    let mut bytes = w.into_inner().map_err(|e| LvtError::Config(e.to_string()))?;
    bytes.extend_from_slice(format!("gini={}\n", l.gini).as_bytes());
    Ok(bytes)
}

/// Every `thin`-th recorded time of every path.
pub fn path_rows(b: &PathBundle, thin: usize) -> Vec<Vec<String>> {
    let thin = thin.max(1);
    let mut rows = Vec::new();
    for (id, p) in b.paths.iter().enumerate() {
        for n in (0..b.times.len()).step_by(thin) {
            rows.push(vec![id.to_string(), f(b.times[n]), f(p.a[n]), f(p.mu[n]), f(p.v[n]), f(p.k[n])]);
        }
    }
    rows
}

pub fn summary_rows(b: &PathBundle) -> Vec<Vec<String>> {
    (0..b.times.len())
        .map(|n| {
            vec![
                f(b.times[n]),
                f(b.v.mean[n]),
                f(b.v.var[n]),
                f(b.v.q05[n]),
                f(b.v.q95[n]),
                f(b.k.mean[n]),
                f(b.k.var[n]),
                f(b.k.q05[n]),
                f(b.k.q95[n]),
            ]
        })
        .collect()
}

pub const RINGS_HEADER: [&str; 6] = ["d_mid", "V_ring", "K_ring", "V_continuum", "K_continuum", "rel_dev"];

pub fn ring_rows(c: &RingComparison) -> Vec<Vec<String>> {
    (0..c.midpoints.len())
        .map(|n| {
            vec![
                f(c.midpoints[n]),
                f(c.ring_v[n]),
                f(c.ring_k[n]),
                f(c.continuum_v[n]),
                f(c.continuum_k[n]),
                c.deviation[n].map(f).unwrap_or_default(),
            ]
        })
        .collect()
}

pub const ROBUSTNESS_HEADER: [&str; 7] = ["profile", "tau", "tau_c_min", "tau_c_max", "n_crossings", "crossings", "pass"];

/// One row per profile at its mid-range rate, then one per reported rate.
pub fn robustness_rows(r: &RobustnessReport) -> Vec<Vec<String>> {
    let join = |c: &[f64]| c.iter().map(|x| f(*x)).collect::<Vec<_>>().join(";");
    let mut rows = Vec::new();
    for p in &r.profiles {
        rows.push(vec![
            p.profile.name().to_string(),
            f(p.tau_mid),
            f(p.tau_c_min),
            f(p.tau_c_max),
            p.crossings_at_mid.len().to_string(),
            join(&p.crossings_at_mid),
            p.pass.to_string(),
        ]);
        for fc in &p.fronts {
            rows.push(vec![
                p.profile.name().to_string(),
                f(fc.tau),
                f(p.tau_c_min),
                f(p.tau_c_max),
                fc.crossings.len().to_string(),
                join(&fc.crossings),
                String::new(),
            ]);
        }
    }
    rows
}

fn normalized(field: &Grid) -> (f64, f64) {
    let lo = field.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, if hi > lo { hi - lo } else { 1.0 })
}

/// Plain PGM (P2), `y` increasing upwards, scaled to the field's range.
pub fn pgm_bytes(field: &Grid) -> Vec<u8> {
    let (nx, ny) = field.dim();
    let (lo, span) = normalized(field);
    let mut s = format!("P2\n{nx} {ny}\n255\n");
    for j in (0..ny).rev() {
        let row: Vec<String> = (0..nx)
            .map(|i| (((field[[i, j]] - lo) / span * 255.0).round() as u8).to_string())
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s.into_bytes()
}

/// Grayscale SVG with one square per node.
pub fn svg_bytes(field: &Grid) -> Vec<u8> {
    let (nx, ny) = field.dim();
    let (lo, span) = normalized(field);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" shape-rendering=\"crispEdges\">\n",
        nx * 4,
        ny * 4
    );
    for j in 0..ny {
        for i in 0..nx {
            let g = ((field[[i, j]] - lo) / span * 255.0).round() as u8;
            let _ = writeln!(
                s,
                "<rect x=\"{}\" y=\"{}\" width=\"4\" height=\"4\" fill=\"rgb({g},{g},{g})\"/>",
                i * 4,
                (ny - 1 - j) * 4
            );
        }
    }
    s.push_str("</svg>\n");
    s.into_bytes()
}

/// Writes `{field}_{tau}_{t}.{ext}` heatmaps of `V` and `K`.
pub fn write_heatmaps(out: &mut OutputDir, fmt: HeatmapFormat, tau: f64, s: &FieldPair) -> Result<()> {
    let (pgm, svg) = match fmt {
        HeatmapFormat::Pgm => (true, false),
        HeatmapFormat::Svg => (false, true),
        HeatmapFormat::Both => (true, true),
        HeatmapFormat::None => (false, false),
    };
    for (name, field) in [("V", &s.v), ("K", &s.k)] {
        if pgm {
            out.write_bytes(format!("{name}_{tau}_{}.pgm", s.t), &pgm_bytes(field))?;
        }
        if svg {
            out.write_bytes(format!("{name}_{tau}_{}.svg", s.t), &svg_bytes(field))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_csv("a/x.csv", &["t", "v"], &[vec!["0".into(), "1.5".into()]]).unwrap();
        let text = fs::read_to_string(dir.path().join("a/x.csv")).unwrap();
        assert_eq!(text, "t,v\n0,1.5\n");
        out.write_manifest().unwrap();
        let m = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        let line = m.lines().next().unwrap();
        let (path, hash) = line.split_once('\t').unwrap();
        assert_eq!(path, "a/x.csv");
        assert_eq!(hash, hex::encode(Sha256::digest(text.as_bytes())));
    }

    #[test]
    fn lorenz_footer() {
        let l = Lorenz {
            points: vec![(0.0, 0.0), (1.0, 1.0)],
            gini: 0.0,
        };
        let s = String::from_utf8(lorenz_bytes(&l).unwrap()).unwrap();
        assert_eq!(s, "pop_share,psi_share\n0,0\n1,1\ngini=0\n");
    }

    #[test]
    fn pgm_layout() {
        let g = Grid::from_shape_fn((3, 2), |(i, j)| (i + 3 * j) as f64);
        let s = String::from_utf8(pgm_bytes(&g)).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[..3], ["P2", "3 2", "255"]);
        assert_eq!(lines[3], "153 204 255");
        assert_eq!(lines[4], "0 51 102");
    }
}
