//! Report plumbing: the JSON check report, contour sheets (CSV and SVG) and
//! the fixed reproduction suite.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builtins::{
    adm, aubert, frobenius_squared, silhavy_energy, w0, AdmParameter, ADM_CONVEX_LIMIT,
    ADM_POLYCONVEX_LIMIT, ADM_RANK_ONE_LIMIT,
};
use crate::energy::{DomainGrid, OrderedSVEnergy, VolIsoSplitEnergy};
use crate::error::{Error, Result};
use crate::planar::Mat2;
use crate::polyconvexity::{c_interval, polyconvexity_falsify, required_c_bound, BoundKind, PolyGrids, PolyReport};
use crate::rank_one::{
    convexity_scan, rank_one_random_scan, rank_one_scan, split_rank_one_criterion, LogGrid, ScanReport,
    ScanSettings, SplitCriterionReport,
};
use crate::sublevel::{
    aubert_connect_path, compactness_check, connect_path, grid_connectivity, ordered_compactness_check,
    random_gl_pairs, segment_slopes, CompactnessReport, ConnectivityReport, SAMPLES_PER_SEGMENT,
};
use crate::verdict::Verdict;

pub const SCHEMA_VERSION: u32 = 1;

/// Six significant digits for human-facing output.
pub fn fmt6(x: f64) -> String {
    if !x.is_finite() || x == 0.0 {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-4..6).contains(&exp) {
        trim(format!("{:.*}", (5 - exp) as usize, x))
    } else {
        let s = format!("{x:.5e}");
        let (m, e) = s.split_once('e').unwrap_or((&s, "0"));
        format!("{}e{e}", trim(m.to_string()))
    }
}

/// Outcome of one check, as written by `check` subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub schema_version: u32,
    pub energy: String,
    pub check: String,
    pub verdict: Verdict,
    pub resolution: String,
    /// Finite scalar margins only; non-finite values are kept in `witnesses`.
    #[serde(default)]
    pub margins: BTreeMap<String, f64>,
    #[serde(default)]
    pub witnesses: serde_json::Value,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

impl CheckReport {
    pub fn new(energy: &str, check: &str, verdict: Verdict, resolution: String) -> Self {
        CheckReport {
            schema_version: SCHEMA_VERSION,
            energy: energy.to_string(),
            check: check.to_string(),
            verdict,
            resolution,
            margins: BTreeMap::new(),
            witnesses: serde_json::Value::Null,
            notes: Vec::new(),
            wall_time_ms: None,
        }
    }

    pub fn margin(&mut self, key: &str, v: Option<f64>) {
        if let Some(v) = v.filter(|v| v.is_finite()) {
            self.margins.insert(key.to_string(), v);
        }
    }

    pub fn from_scan(check: &str, r: &ScanReport) -> Self {
        let mut c = CheckReport::new(&r.energy, check, r.verdict, r.resolution.clone());
        c.margin("min_scaled_second_difference", r.min_scaled_second_difference);
        c.margin("evaluations", Some(r.evaluations as f64));
        c.witnesses = serde_json::json!({
            "line": to_value(&r.witness),
            "direction": to_value(&r.direction_witness),
        });
        c
    }

    pub fn from_criterion(r: &SplitCriterionReport) -> Self {
        let mut c = CheckReport::new(
            &r.energy,
            "rank-one-criterion",
            r.verdict,
            format!("{} log points on [{:e}, {:e}]", r.grid.n, r.grid.lo, r.grid.hi),
        );
        c.margin("h0", Some(r.h0.effective()));
        c.margin("f0", Some(r.f0.effective()));
        for (k, cond) in [
            ("i", &r.condition_i),
            ("ii", &r.condition_ii),
            ("iii", &r.condition_iii),
            ("iv", &r.condition_iv),
        ] {
            c.margin(&format!("condition_{k}_worst"), cond.worst_margin);
        }
        c.margin("condition_iii_max_abs_first_disjunct", r.condition_iii.max_abs_first_disjunct);
        c.witnesses = to_value(r);
        c.notes = r.notices.clone();
        c
    }

    pub fn from_poly(r: &PolyReport) -> Self {
        let mut c = CheckReport::new(&r.energy, "polyconvexity", r.verdict, r.resolution.clone());
        c.margin("gammas_checked", Some(r.gammas_checked as f64));
        c.margin("falsified_gammas", Some(r.falsified_gammas as f64));
        c.margin("gap", r.witness.as_ref().map(|w| w.gap));
        c.witnesses = to_value(&r.witness);
        if r.skipped_diagonal + r.skipped_seam > 0 {
            c.notes.push(format!(
                "skipped {} diagonal and {} seam points",
                r.skipped_diagonal, r.skipped_seam
            ));
        }
        c
    }

    pub fn from_compactness(r: &CompactnessReport) -> Self {
        let mut c = CheckReport::new(
            &r.energy,
            "sublevel-compactness",
            r.verdict,
            format!("level {}", r.level),
        );
        c.margin("radius", r.radius);
        c.margin("boundary_margin", r.boundary_margin);
        c.margin("lower_bound", r.lower_bound);
        c.margin("distortion_bound", r.distortion_bound);
        c.witnesses = to_value(r);
        c.notes = r.notes.clone();
        c
    }

    pub fn from_connectivity(r: &ConnectivityReport) -> Self {
        let g = &r.grid;
        let mut c = CheckReport::new(
            &r.energy,
            "sublevel-connectivity",
            if r.components <= 1 { Verdict::Pass } else { Verdict::Fail },
            format!(
                "{}x{} log grid on [{}, {}] x [{}, {}], level {}",
                g.n_u, g.n_v, g.u_min, g.u_max, g.v_min, g.v_max, r.level
            ),
        );
        c.margin("components", Some(r.components as f64));
        c.margin("nodes_in_sublevel", Some(r.nodes_in_sublevel as f64));
        c
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(src: &str) -> Result<Self> {
        serde_json::from_str(src).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            token: String::new(),
            message: e.to_string(),
        })
    }

    pub fn render_text(&self) -> String {
        let mut s = format!("{} [{}]: {}\n  resolution: {}\n", self.energy, self.check, self.verdict, self.resolution);
        for (k, v) in &self.margins {
            let _ = writeln!(s, "  {k}: {}", fmt6(*v));
        }
        for n in &self.notes {
            let _ = writeln!(s, "  note: {n}");
        }
        s
    }
}

/// `W(diag(λ₁, λ₂))` on a log grid, with optional contour levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSheet {
    pub energy: String,
    pub grid: DomainGrid,
    pub levels: Vec<f64>,
    /// Row-major: outer index over `λ₁`, inner over `λ₂`.
    pub values: Vec<f64>,
}

impl ContourSheet {
    pub fn compute(e: &OrderedSVEnergy, grid: &DomainGrid, levels: &[f64]) -> Result<Self> {
        if levels.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut levels = levels.to_vec();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let us = grid.u_values();
        let vs = grid.v_values();
        let mut values = Vec::with_capacity(us.len() * vs.len());
        for u in &us {
            for v in &vs {
                let (a, b) = (u.exp(), v.exp());
                values.push(e.value(a.max(b), a.min(b)));
            }
        }
        Ok(ContourSheet {
            energy: e.name().to_string(),
            grid: *grid,
            levels,
            values,
        })
    }

    pub fn lambda(&self, k: usize) -> (f64, f64) {
        let nv = self.grid.n_v;
        (
            self.grid.u_values()[k / nv].exp(),
            self.grid.v_values()[k % nv].exp(),
        )
    }

    /// Index of the lowest level with `W ≤ level`; `None` above all levels.
    pub fn band(&self, w: f64) -> Option<usize> {
        self.levels.iter().position(|&l| w <= l)
    }

    /// Header `lambda1,lambda2,W`, plus a `band` column when levels are set.
    /// Numbers use shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(if self.levels.is_empty() {
            "lambda1,lambda2,W\n"
        } else {
            "lambda1,lambda2,W,band\n"
        });
        let us = self.grid.u_values();
        let vs = self.grid.v_values();
        let nv = vs.len();
        for (k, w) in self.values.iter().enumerate() {
            let (a, b) = (us[k / nv].exp(), vs[k % nv].exp());
            let _ = write!(s, "{a},{b},{w}");
            if !self.levels.is_empty() {
                match self.band(*w) {
                    Some(i) => {
                        let _ = write!(s, ",{i}");
                    }
                    None => s.push(','),
                }
            }
            s.push('\n');
        }
        s
    }

    /// Reads back `(λ₁, λ₂, W)` records from CSV produced by `to_csv`.
    pub fn parse_csv(src: &str) -> Result<Vec<[f64; 3]>> {
        let mut lines = src.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.starts_with("lambda1,lambda2,W") => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    column: 1,
                    token: String::new(),
                    message: "missing header lambda1,lambda2,W".into(),
                })
            }
        }
        let mut out = Vec::new();
        for (i, line) in lines {
            let mut rec = [0.0; 3];
            let mut fields = line.split(',');
            for (k, slot) in rec.iter_mut().enumerate() {
                let tok = fields.next().unwrap_or("");
                *slot = tok.parse().map_err(|_| Error::Parse {
                    line: i + 1,
                    column: k + 1,
                    token: tok.to_string(),
                    message: "expected a number".into(),
                })?;
            }
            out.push(rec);
        }
        Ok(out)
    }

    fn fill(&self, band: Option<usize>) -> String {
        match band {
            None => "#ffffff".into(),
            Some(i) => {
                let n = self.levels.len().max(1) as f64;
                let g = (40.0 + 190.0 * i as f64 / n).round() as u8;
                format!("#{g:02x}{g:02x}{g:02x}")
            }
        }
    }

    /// Static level-band rendering: one rectangle per run of equal band
    /// along each row, darker for lower levels, `ln λ₁` to the right and
    /// `ln λ₂` upwards.
    pub fn to_svg(&self) -> String {
        let (nu, nv) = (self.grid.n_u, self.grid.n_v);
        let cell = (600 / nu.max(nv)).max(2);
        let (w, h) = (nu * cell, nv * cell);
        let margin = 40;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
            w + 2 * margin,
            h + 2 * margin,
            w + 2 * margin,
            h + 2 * margin
        );
        let levels: Vec<String> = self.levels.iter().map(|l| format!("{l}")).collect();
        let _ = writeln!(s, "<title>{} levels [{}]</title>", self.energy, levels.join(", "));
        let _ = writeln!(s, "<g transform=\"translate({margin},{margin})\" shape-rendering=\"crispEdges\">");
        for j in 0..nv {
            let y = (nv - 1 - j) * cell;
            let mut i = 0;
            while i < nu {
                let band = self.band(self.values[i * nv + j]);
                let mut k = i + 1;
                while k < nu && self.band(self.values[k * nv + j]) == band {
                    k += 1;
                }
                if band.is_some() {
                    let _ = writeln!(
                        s,
                        "<rect x=\"{}\" y=\"{y}\" width=\"{}\" height=\"{cell}\" fill=\"{}\"/>",
                        i * cell,
                        (k - i) * cell,
                        self.fill(band)
                    );
                }
                i = k;
            }
        }
        let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"#000000\"/>");
        let _ = writeln!(s, "</g>");
        let g = &self.grid;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">ln lambda1 in [{}, {}]</text>",
            margin + w / 2,
            h + margin + 25,
            g.u_min,
            g.u_max
        );
        let _ = writeln!(
            s,
            "<text x=\"12\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 12 {})\">ln lambda2 in [{}, {}]</text>",
            margin + h / 2,
            margin + h / 2,
            g.v_min,
            g.v_max
        );
        s.push_str("</svg>\n");
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteItem {
    Values,
    RankOne,
    Polyconvexity,
    AdmThresholds,
    Aubert,
    Compactness,
    Connectivity,
}

impl SuiteItem {
    pub const ALL: [SuiteItem; 7] = [
        SuiteItem::Values,
        SuiteItem::RankOne,
        SuiteItem::Polyconvexity,
        SuiteItem::AdmThresholds,
        SuiteItem::Aubert,
        SuiteItem::Compactness,
        SuiteItem::Connectivity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteItem::Values => "values",
            SuiteItem::RankOne => "rank-one",
            SuiteItem::Polyconvexity => "polyconvexity",
            SuiteItem::AdmThresholds => "adm-thresholds",
            SuiteItem::Aubert => "aubert",
            SuiteItem::Compactness => "compactness",
            SuiteItem::Connectivity => "connectivity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        SuiteItem::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown suite item '{s}'")))
    }
}

/// One expectation inside a suite item. Numeric checks carry the expected
/// and observed values and the tolerance; others only the description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemCheck {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub detail: String,
    pub passed: bool,
}

impl ItemCheck {
    fn number(name: &str, expected: f64, observed: f64, tolerance: f64) -> Self {
        let diff = (observed - expected).abs();
        ItemCheck {
            name: name.to_string(),
            expected: Some(expected),
            observed: Some(observed).filter(|v| v.is_finite()),
            tolerance: Some(tolerance),
            detail: format!("expected {expected}, observed {observed}, diff {diff:e}"),
            passed: diff <= tolerance,
        }
    }

    fn at_most(name: &str, bound: f64, observed: f64) -> Self {
        ItemCheck {
            name: name.to_string(),
            expected: None,
            observed: Some(observed).filter(|v| v.is_finite()),
            tolerance: Some(bound),
            detail: format!("observed {observed:e}, required <= {bound:e}"),
            passed: observed <= bound,
        }
    }

    fn at_least(name: &str, bound: f64, observed: f64) -> Self {
        ItemCheck {
            name: name.to_string(),
            expected: None,
            observed: Some(observed).filter(|v| v.is_finite()),
            tolerance: Some(bound),
            detail: format!("observed {observed:e}, required >= {bound:e}"),
            passed: observed >= bound,
        }
    }

    fn verdict(name: &str, expected: Verdict, observed: Verdict) -> Self {
        ItemCheck {
            name: name.to_string(),
            expected: None,
            observed: None,
            tolerance: None,
            detail: format!("expected {expected}, observed {observed}"),
            passed: expected == observed,
        }
    }

    fn flag(name: &str, detail: String, passed: bool) -> Self {
        ItemCheck {
            name: name.to_string(),
            expected: None,
            observed: None,
            tolerance: None,
            detail,
            passed,
        }
    }

    fn error(name: &str, e: &Error) -> Self {
        ItemCheck::flag(name, format!("error: {e}"), false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub item: SuiteItem,
    pub passed: bool,
    pub checks: Vec<ItemCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub schema_version: u32,
    pub passed: bool,
    pub items: Vec<ItemOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl ReproduceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(src: &str) -> Result<Self> {
        serde_json::from_str(src).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            token: String::new(),
            message: e.to_string(),
        })
    }

    /// Per-item summary; failing checks are listed with their diff.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        for item in &self.items {
            let ok = item.checks.iter().filter(|c| c.passed).count();
            let _ = writeln!(
                s,
                "{} {}: {}/{} checks",
                if item.passed { "PASS" } else { "FAIL" },
                item.item.name(),
                ok,
                item.checks.len()
            );
            for c in item.checks.iter().filter(|c| !c.passed) {
                let _ = writeln!(s, "  mismatch {}: {}", c.name, c.detail);
            }
        }
        let _ = writeln!(s, "{}", if self.passed { "all items pass" } else { "some items fail" });
        s
    }
}

#[derive(Debug, Clone)]
pub struct ReproduceOptions {
    /// Items to run, in suite order; empty means all.
    pub only: Vec<SuiteItem>,
    /// Energy used wherever the suite exercises `W₀`.
    pub w0: VolIsoSplitEnergy,
    pub timing: bool,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        ReproduceOptions {
            only: Vec::new(),
            w0: w0(),
            timing: false,
        }
    }
}

/// Runs the selected items in parallel; output order follows the suite.
pub fn reproduce(opts: &ReproduceOptions) -> ReproduceReport {
    let start = Instant::now();
    let items: Vec<SuiteItem> = SuiteItem::ALL
        .into_iter()
        .filter(|i| opts.only.is_empty() || opts.only.contains(i))
        .collect();
    let outcomes: Vec<ItemOutcome> = items
        .par_iter()
        .map(|&item| {
            let t = Instant::now();
            let checks = run_item(item, &opts.w0);
            ItemOutcome {
                item,
                passed: checks.iter().all(|c| c.passed),
                checks,
                wall_time_ms: opts.timing.then(|| t.elapsed().as_secs_f64() * 1e3),
            }
        })
        .collect();
    ReproduceReport {
        schema_version: SCHEMA_VERSION,
        passed: outcomes.iter().all(|o| o.passed),
        items: outcomes,
        wall_time_ms: opts.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    }
}

fn run_item(item: SuiteItem, w0e: &VolIsoSplitEnergy) -> Vec<ItemCheck> {
    match item {
        SuiteItem::Values => values_item(w0e),
        SuiteItem::RankOne => rank_one_item(w0e),
        SuiteItem::Polyconvexity => polyconvexity_item(w0e),
        SuiteItem::AdmThresholds => adm_item(),
        SuiteItem::Aubert => aubert_item(),
        SuiteItem::Compactness => compactness_item(w0e),
        SuiteItem::Connectivity => connectivity_item(w0e),
    }
}

fn eval_check(name: &str, e: &OrderedSVEnergy, m: &Mat2, expected: f64, tol: f64) -> ItemCheck {
    match e.eval_matrix(m) {
        Ok(v) => ItemCheck::number(name, expected, v, tol),
        Err(err) => ItemCheck::error(name, &err),
    }
}

fn values_item(w0e: &VolIsoSplitEnergy) -> Vec<ItemCheck> {
    use std::f64::consts::E;
    let g = w0e.to_ordered();
    let mut out = vec![
        eval_check("W0(id)", &g, &Mat2::IDENTITY, 2.0, 1e-15),
        eval_check("W0(diag(e^4, e^3))", &g, &Mat2::diag(E.powi(4), E.powi(3)), E + 6.0 + E.powi(-7), 1e-12),
        eval_check("aubert(id)", &aubert(), &Mat2::IDENTITY, -1.0 / 6.0, 1e-15),
        eval_check("adm:1.1(id)", &adm(AdmParameter { gamma: 1.1 }), &Mat2::IDENTITY, 4.0 * (1.0 - 1.1), 1e-12),
    ];
    match split_rank_one_criterion(w0e, &LogGrid::CRITERION) {
        Ok(r) => {
            out.push(ItemCheck::number("h0 numeric", 1.0, r.h0.numeric, 1e-6));
            out.push(ItemCheck::number("f0 numeric", -1.0, r.f0.numeric, 1e-6));
        }
        Err(e) => out.push(ItemCheck::error("h0/f0", &e)),
    }
    out
}

fn rank_one_item(w0e: &VolIsoSplitEnergy) -> Vec<ItemCheck> {
    let r = match split_rank_one_criterion(w0e, &LogGrid::CRITERION) {
        Ok(r) => r,
        Err(e) => return vec![ItemCheck::error("criterion", &e)],
    };
    let iii = &r.condition_iii;
    vec![
        ItemCheck::flag("condition i", format!("worst margin {:?}", r.condition_i.worst_margin), r.condition_i.passed),
        ItemCheck::flag("condition ii", format!("worst margin {:?}", r.condition_ii.worst_margin), r.condition_ii.passed),
        ItemCheck::flag(
            "condition iii",
            format!(
                "first disjunct held at {}/{} points ({} below t = 1, {} above)",
                iii.first_disjunct_held, iii.points, iii.points_below_one, iii.points_above_one
            ),
            iii.passed && iii.points_below_one > 0 && iii.points_above_one > 0,
        ),
        ItemCheck::at_least("condition iii points", 2000.0, iii.points as f64),
        ItemCheck::at_most(
            "condition iii max |first disjunct|",
            1e-10,
            iii.max_abs_first_disjunct.unwrap_or(f64::INFINITY),
        ),
        ItemCheck::at_least(
            "condition iv worst margin",
            -1e-9,
            r.condition_iv.worst_margin.unwrap_or(f64::NEG_INFINITY),
        ),
        ItemCheck::verdict("verdict", Verdict::Pass, r.verdict),
    ]
}

fn polyconvexity_item(w0e: &VolIsoSplitEnergy) -> Vec<ItemCheck> {
    use std::f64::consts::E;
    let g = w0e.to_ordered();
    let gamma = (E.powi(4), E.powi(3));
    let nu = (E, 1.0);
    let mut out = Vec::new();
    match c_interval(&g, gamma.0, gamma.1) {
        Ok(i) => {
            out.push(ItemCheck::number("c_lo at (e^4, e^3)", -0.002_479_58, i.c_lo, 1e-8));
            out.push(ItemCheck::number("c_lo closed form -(1+e^8)/e^14", -(1.0 + E.powi(8)) / E.powi(14), i.c_lo, 1e-12));
        }
        Err(e) => out.push(ItemCheck::error("c_lo", &e)),
    }
    match required_c_bound(&g, gamma, nu) {
        Ok(b) => {
            out.push(ItemCheck::number("required c bound at nu = (e, 1)", -0.003_771_47, b.threshold, 1e-8));
            out.push(ItemCheck::flag(
                "bound is an upper bound",
                format!("{:?}", b.kind),
                b.kind == BoundKind::Upper,
            ));
        }
        Err(e) => out.push(ItemCheck::error("required bound", &e)),
    }
    let single = polyconvexity_falsify(&g, &[gamma], &[nu]);
    out.push(ItemCheck::verdict("falsify at (e^4, e^3), (e, 1)", Verdict::Fail, single.verdict));
    out.push(ItemCheck::flag(
        "witness present",
        format!("{:?}", single.witness.as_ref().map(|w| w.gap)),
        single.witness.is_some(),
    ));
    out.push(ItemCheck::verdict("default grids", Verdict::Fail, PolyGrids::default().run(&g).verdict));
    out
}

fn adm_item() -> Vec<ItemCheck> {
    let settings = ScanSettings::default();
    let mut out = Vec::new();
    for gamma in [0.94, 0.95, 1.0, 1.1, 1.2] {
        let e = adm(AdmParameter { gamma });
        let expect = |ok: bool| if ok { Verdict::NoViolationFound } else { Verdict::Fail };
        out.push(ItemCheck::verdict(
            &format!("rank-one scan gamma = {gamma}"),
            expect(gamma <= ADM_RANK_ONE_LIMIT),
            rank_one_scan(&e, &settings).verdict,
        ));
        out.push(ItemCheck::verdict(
            &format!("convexity scan gamma = {gamma}"),
            expect(gamma <= ADM_CONVEX_LIMIT),
            convexity_scan(&e, &settings).verdict,
        ));
        out.push(ItemCheck::verdict(
            &format!("polyconvexity gamma = {gamma}"),
            expect(gamma <= ADM_POLYCONVEX_LIMIT),
            PolyGrids::default().run(&e).verdict,
        ));
    }
    out
}

fn aubert_item() -> Vec<ItemCheck> {
    let e = aubert();
    let mut out = Vec::new();
    for t in [0.5f64, 1.0, 2.0, 10.0] {
        let expected = -t.powi(4) / 6.0;
        out.push(eval_check(
            &format!("aubert(t id), t = {t}"),
            &e,
            &Mat2::diag(t, t),
            expected,
            1e-12 * expected.abs(),
        ));
    }
    let r = ordered_compactness_check(&e, 0.0);
    out.push(ItemCheck::verdict("compactness at c = 0", Verdict::Fail, r.verdict));
    out.push(ItemCheck::flag(
        "diagonal ray escapes",
        format!("bounded = {:?}", r.bounded),
        r.bounded == Some(false),
    ));
    let mut worst = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    let mut valid = true;
    for (f, ft) in random_gl_pairs(11, 10, 1.0) {
        let c = e.eval_matrix(&f).unwrap_or(f64::NAN).max(e.eval_matrix(&ft).unwrap_or(f64::NAN));
        match aubert_connect_path(&e, &f, &ft, c) {
            Ok(p) => {
                valid &= p.validate(&e, SAMPLES_PER_SEGMENT).valid;
                for s in segment_slopes(&p, &e, SAMPLES_PER_SEGMENT) {
                    let forward = !p.swapped;
                    let (lo, hi) = if forward { (s.min, s.max) } else { (-s.max, -s.min) };
                    match s.label.as_str() {
                        "X1" => worst.0 = worst.0.max(hi),
                        "X2" => worst.1 = worst.1.max(hi),
                        "X3" => worst.2 = worst.2.min(lo),
                        _ => {}
                    }
                }
            }
            Err(err) => return vec![ItemCheck::error("aubert path", &err)],
        }
    }
    out.push(ItemCheck::flag("aubert paths stay in the sublevel set", String::new(), valid));
    out.push(ItemCheck::at_most("max dW/ds along X1", 0.0, worst.0));
    out.push(ItemCheck::at_most("max dW/ds along X2", 0.0, worst.1));
    out.push(ItemCheck::at_least("min dW/ds along X3", 0.0, worst.2));
    out.push(ItemCheck::number(
        "components at c = 0",
        1.0,
        grid_connectivity(&e, 0.0, &DomainGrid::default()).components as f64,
        0.0,
    ));
    out
}

fn compactness_item(w0e: &VolIsoSplitEnergy) -> Vec<ItemCheck> {
    let mut out = Vec::new();
    for c in [3.0, 5.0, 10.0] {
        let r = compactness_check(w0e, c);
        let detail = if r.notes.is_empty() {
            format!("radius {:?}, boundary margin {:?}", r.radius, r.boundary_margin)
        } else {
            r.notes.join("; ")
        };
        out.push(ItemCheck::flag(
            &format!("W0 compact at c = {c}"),
            detail,
            r.verdict == Verdict::Pass && r.boundary_margin.is_some_and(|m| m > 0.0),
        ));
    }
    for (e, c) in [
        (adm(AdmParameter { gamma: 1.1 }), 1.0),
        (aubert(), 0.0),
        (silhavy_energy(), 1.0),
    ] {
        let r = ordered_compactness_check(&e, c);
        out.push(ItemCheck::verdict(&format!("{} not compact at c = {c}", e.name()), Verdict::Fail, r.verdict));
    }
    out
}

fn connectivity_item(w0e: &VolIsoSplitEnergy) -> Vec<ItemCheck> {
    let g = w0e.to_ordered();
    let mut out = Vec::new();
    for n in [121, 241] {
        let grid = DomainGrid::square(-3.0, 3.0, n);
        for c in [2.1, 3.0, 5.0] {
            out.push(ItemCheck::number(
                &format!("W0 components at c = {c}, {n}x{n}"),
                1.0,
                grid_connectivity(&g, c, &grid).components as f64,
                0.0,
            ));
        }
    }
    let mut valid = 0;
    let pairs = random_gl_pairs(5, 20, 1.5);
    let mut detail = String::new();
    for (f, ft) in &pairs {
        let c = g.eval_matrix(f).unwrap_or(f64::NAN).max(g.eval_matrix(ft).unwrap_or(f64::NAN));
        match connect_path(w0e, f, ft, c) {
            Ok(p) if p.validate(&g, SAMPLES_PER_SEGMENT).valid => valid += 1,
            Ok(p) => detail = format!("{:?}", p.validate(&g, SAMPLES_PER_SEGMENT)),
            Err(e) => detail = e.to_string(),
        }
    }
    out.push(ItemCheck::flag(
        "W0 connecting paths",
        format!("{valid}/{} valid {detail}", pairs.len()),
        valid == pairs.len(),
    ));
    out
}

/// Cross-method consistency on `|F|²`: no polyconvexity violation and the
/// minorant with `c = 0` holds everywhere on the grid.
pub fn norm2_consistency() -> (PolyReport, f64) {
    let e = frobenius_squared();
    let report = PolyGrids::default().run(&e);
    let pts = PolyGrids::points(&DomainGrid::square(-2.0, 2.0, 21));
    let mut worst = f64::INFINITY;
    for &g in &pts {
        for &n in &pts {
            if let Ok(r) = crate::polyconvexity::minorant_residual(&e, g, n, 0.0) {
                worst = worst.min(r);
            }
        }
    }
    (report, worst)
}

/// Seeded random rank-one scan, as used in the consistency checks.
pub fn random_scan(e: &OrderedSVEnergy, samples: usize) -> ScanReport {
    rank_one_random_scan(e, samples, 7, &ScanSettings::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt6_examples() {
        assert_eq!(fmt6(2.0), "2");
        assert_eq!(fmt6(-1.0 / 6.0), "-0.166667");
        assert_eq!(fmt6(-0.002479583705385462), "-0.00247958");
        assert_eq!(fmt6(1234567.0), "1.23457e6");
        assert_eq!(fmt6(0.0), "0");
    }

    #[test]
    fn check_report_round_trip() {
        let r = rank_one_scan(&aubert(), &ScanSettings {
            bases: DomainGrid::square(-1.0, 1.0, 5),
            ..ScanSettings::default()
        });
        let c = CheckReport::from_scan("rank-one", &r);
        let back = CheckReport::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), c.to_json());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = w0().to_ordered();
        let sheet = ContourSheet::compute(&g, &DomainGrid::square(-1.0, 1.0, 7), &[]).unwrap();
        let csv = sheet.to_csv();
        assert!(csv.starts_with("lambda1,lambda2,W\n"));
        let rows = ContourSheet::parse_csv(&csv).unwrap();
        assert_eq!(rows.len(), 49);
        for (k, r) in rows.iter().enumerate() {
            let (a, b) = sheet.lambda(k);
            assert_eq!(r[0], a);
            assert_eq!(r[1], b);
            assert_eq!(r[2], sheet.values[k]);
        }
    }

    #[test]
    fn bands_are_darkest_lowest() {
        let g = w0().to_ordered();
        let sheet = ContourSheet::compute(&g, &DomainGrid::square(-1.0, 1.0, 9), &[4.0, 2.5, 3.0]).unwrap();
        assert_eq!(sheet.levels, vec![2.5, 3.0, 4.0]);
        assert_eq!(sheet.band(2.0), Some(0));
        assert_eq!(sheet.band(3.5), Some(2));
        assert_eq!(sheet.band(9.0), None);
        assert!(sheet.fill(Some(0)) < sheet.fill(Some(2)));
        let svg = sheet.to_svg();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains(&sheet.fill(Some(0))));
    }

    #[test]
    fn suite_item_names() {
        for i in SuiteItem::ALL {
            assert_eq!(SuiteItem::parse(i.name()).unwrap(), i);
            assert_eq!(serde_json::to_value(i).unwrap(), serde_json::json!(i.name()));
        }
        assert!(SuiteItem::parse("nope").is_err());
    }
}
